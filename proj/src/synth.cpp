#include "metriq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace metriq {

Vec transpose_times(const Matrix& a, const Vec& v) {
    if (static_cast<int>(v.size()) != a.rows)
        throw InputError("transpose_times: dimension mismatch");
    Vec out(static_cast<std::size_t>(a.cols), 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double vi = v[i];
        for (int j = 0; j < a.cols; ++j) out[j] += a.at(i, j) * vi;
    }
    return out;
}

Vec GaussianMixture::sample(Rng& rng) const {
    const int comp = rng.categorical(weights);
    const Vec& mu = means[comp];
    const Matrix& factor = factors[comp];
    Vec eps(mu.size());
    for (double& e : eps) e = rng.normal();
    Vec x = transpose_times(factor, eps);
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += mu[d];
    return x;
}

namespace {

GaussianMixture sample_mixture(Rng& rng, int dim, int components) {
    GaussianMixture mix;
    Vec scales(components);
    for (int i = 0; i < components; ++i) {
        scales[i] = rng.uniform(0.5, 1.5);
        Vec mu(dim);
        for (double& m : mu) m = rng.normal();
        Matrix factor(dim, dim);
        const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
        for (double& e : factor.data) e = rng.normal(0.0, sd);
        mix.means.push_back(std::move(mu));
        mix.factors.push_back(std::move(factor));
    }
    double total = 0.0;
    for (double s : scales) total += s;
    mix.weights.resize(components);
    for (int i = 0; i < components; ++i) mix.weights[i] = scales[i] / total;
    return mix;
}

}  // namespace

GenerativeModel sample_generative_model(Rng& rng, int feature_count, int missing_count,
                                        int class_count) {
    if (feature_count < 1 || missing_count < 1 || class_count < 1)
        throw InputError("sample_generative_model: dimensions must be >= 1");

    GenerativeModel model;
    Vec alphas(class_count);
    for (int m = 0; m < class_count; ++m) {
        alphas[m] = rng.uniform(0.5, 1.5);
        model.x_mixtures.push_back(sample_mixture(rng, feature_count, 5));
        model.z_mixtures.push_back(sample_mixture(rng, missing_count, 2));
    }
    double total = 0.0;
    for (double a : alphas) total += a;
    model.class_priors.resize(class_count);
    for (int m = 0; m < class_count; ++m) model.class_priors[m] = alphas[m] / total;

    model.r_true.resize(feature_count);
    for (double& r : model.r_true) r = rng.exponential(1.0);
    model.r_perp_true.resize(missing_count);
    for (double& r : model.r_perp_true) r = rng.exponential(0.2);
    return model;
}

std::vector<SyntheticObject> sample_objects(const GenerativeModel& model, int n, Rng& rng) {
    if (n < 1) throw InputError("sample_objects: n must be >= 1");
    std::vector<SyntheticObject> objects;
    objects.reserve(n);
    for (int i = 0; i < n; ++i) {
        SyntheticObject obj;
        obj.o = "o" + std::to_string(i + 1);
        const int cls = rng.categorical(model.class_priors);
        obj.c = cls + 1;
        obj.x = model.x_mixtures[cls].sample(rng);
        obj.z = model.z_mixtures[cls].sample(rng);
        objects.push_back(std::move(obj));
    }
    return objects;
}

double interpolated_quantile(Vec values, double q) {
    if (values.empty()) throw InputError("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("quantile level must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::pair<std::vector<RatingExample>, RatingGenReport> generate_ratings(
    const std::vector<SyntheticObject>& objects, const Vec& r_true, const Vec& r_perp_true,
    double noise_sd, Rng& rng) {
    if (objects.size() < 2) throw InputError("generate_ratings needs at least 2 objects");
    if (!(noise_sd > 0.0)) throw InputError("generate_ratings: noise_sd must be positive");
    for (const auto& obj : objects) {
        if (obj.x.size() != r_true.size() || obj.z.size() != r_perp_true.size())
            throw InputError("generate_ratings: object dimensions do not match the weights");
    }

    const std::size_t n = objects.size();
    RatingGenReport report;
    report.noise_sd = noise_sd;
    report.y_values.reserve(n * (n - 1));

    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            double y = weighted_sq_dist(r_true, objects[a].x, objects[b].x) +
                       weighted_sq_dist(r_perp_true, objects[a].z, objects[b].z) +
                       rng.normal(0.0, noise_sd);
            report.y_values.push_back(y);
        }

    report.threshold_q20 = interpolated_quantile(report.y_values, 0.20);
    report.threshold_q50 = interpolated_quantile(report.y_values, 0.50);

    std::vector<RatingExample> ratings;
    ratings.reserve(report.y_values.size());
    std::size_t p = 0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            const double y = report.y_values[p++];
            int sigma = 1;
            if (y < report.threshold_q20)
                sigma = 3;
            else if (y < report.threshold_q50)
                sigma = 2;
            ratings.push_back({objects[a].o, objects[b].o, objects[a].x, objects[b].x, sigma});
        }
    return {std::move(ratings), std::move(report)};
}

}  // namespace metriq
