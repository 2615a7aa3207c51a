#include "mpedge/samplers.hpp"

#include <cmath>
#include <stdexcept>

namespace mpedge {

namespace {

void validate(const SamplerModel& m) {
    if (m.dim <= 0) throw std::invalid_argument("sampler dimension must be positive");
    if (m.family == Family::student_t && !(m.nu > 2.0)) {
        throw std::invalid_argument("student_t requires nu > 2");
    }
    if (m.family == Family::symmetric_pareto && !(m.tail_index > 2.0 && m.tail_index <= 4.0)) {
        throw std::invalid_argument("symmetric_pareto requires tail index in (2, 4]");
    }
}

// Marsaglia-Tsang; valid for alpha >= 1, which nu > 2 guarantees.
double draw_gamma(double alpha, RngStream& stream) {
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = stream.next_gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = stream.next_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double draw_student_t(double nu, RngStream& stream) {
    const double z = stream.next_gaussian();
    const double chi2 = 2.0 * draw_gamma(0.5 * nu, stream);
    return z * std::sqrt(nu / chi2) / student_t_scale(nu);
}

double draw_pareto(double a, RngStream& stream) {
    const double mag = pareto_threshold(a) * std::pow(stream.next_open(), -1.0 / a);
    return stream.next_sign_bit() ? -mag : mag;
}

double draw_laplace(RngStream& stream) {
    const double b = 1.0 / std::sqrt(2.0);
    const double e = -b * std::log(stream.next_open());
    return stream.next_sign_bit() ? -e : e;
}

}  // namespace

bool SamplerModel::iid_coordinates() const {
    switch (family) {
        case Family::gaussian:
        case Family::rademacher:
        case Family::student_t:
        case Family::symmetric_pareto:
        case Family::exponential_product:
            return true;
        default:
            return false;
    }
}

bool SamplerModel::log_concave() const {
    return family == Family::gaussian || family == Family::exponential_product ||
           family == Family::uniform_ball;
}

SamplerModel SamplerModel::with_dim(int n) const {
    SamplerModel out = *this;
    out.dim = n;
    return out;
}

SamplerModel SamplerModel::with_seed(std::uint64_t s) const {
    SamplerModel out = *this;
    out.seed = s;
    return out;
}

std::string SamplerModel::family_name() const {
    switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::rademacher: return "rademacher";
        case Family::student_t: return "student_t";
        case Family::symmetric_pareto: return "symmetric_pareto";
        case Family::exponential_product: return "exponential_product";
        case Family::uniform_ball: return "uniform_ball";
        case Family::zero_stub: return "zero";
    }
    return "?";
}

std::map<std::string, std::string> SamplerModel::to_kv() const {
    std::map<std::string, std::string> kv;
    kv["family"] = family_name();
    kv["n"] = std::to_string(dim);
    kv["seed"] = std::to_string(seed);
    if (family == Family::student_t) kv["nu"] = std::to_string(nu);
    if (family == Family::symmetric_pareto) kv["tail_index"] = std::to_string(tail_index);
    return kv;
}

SamplerModel SamplerModel::from_kv(const std::map<std::string, std::string>& kv) {
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::invalid_argument(std::string("missing model key: ") + key);
        return it->second;
    };
    const int n = std::stoi(need("n"));
    const std::uint64_t seed = std::stoull(need("seed"));
    const std::string& fam = need("family");
    if (fam == "student_t") return make_student_t(n, std::stod(need("nu")), seed);
    if (fam == "symmetric_pareto") return make_symmetric_pareto(n, std::stod(need("tail_index")), seed);
    return parse_model(fam, n, seed);
}

SamplerModel make_gaussian(int n, std::uint64_t seed) {
    SamplerModel m{Family::gaussian, n, seed};
    validate(m);
    return m;
}

SamplerModel make_rademacher(int n, std::uint64_t seed) {
    SamplerModel m{Family::rademacher, n, seed};
    validate(m);
    return m;
}

SamplerModel make_student_t(int n, double nu, std::uint64_t seed) {
    SamplerModel m{Family::student_t, n, seed, nu};
    validate(m);
    return m;
}

SamplerModel make_symmetric_pareto(int n, double tail_index, std::uint64_t seed) {
    SamplerModel m{Family::symmetric_pareto, n, seed, 0.0, tail_index};
    validate(m);
    return m;
}

SamplerModel make_exponential_product(int n, std::uint64_t seed) {
    SamplerModel m{Family::exponential_product, n, seed};
    validate(m);
    return m;
}

SamplerModel make_uniform_ball(int n, std::uint64_t seed) {
    SamplerModel m{Family::uniform_ball, n, seed};
    validate(m);
    return m;
}

SamplerModel make_zero_stub(int n, std::uint64_t seed) {
    SamplerModel m{Family::zero_stub, n, seed};
    validate(m);
    return m;
}

SamplerModel parse_model(const std::string& text, int n, std::uint64_t seed) {
    std::string name = text;
    double param = 0.0;
    bool has_param = false;
    const auto open = text.find('(');
    if (open != std::string::npos) {
        const auto close = text.find(')', open);
        if (close == std::string::npos) throw std::invalid_argument("unbalanced '(' in model: " + text);
        name = text.substr(0, open);
        param = std::stod(text.substr(open + 1, close - open - 1));
        has_param = true;
    }
    if (name == "gaussian" || name == "normal") return make_gaussian(n, seed);
    if (name == "rademacher" || name == "sign") return make_rademacher(n, seed);
    if (name == "student_t" || name == "t") {
        if (!has_param) throw std::invalid_argument("student_t needs a degrees-of-freedom parameter");
        return make_student_t(n, param, seed);
    }
    if (name == "symmetric_pareto" || name == "pareto") {
        if (!has_param) throw std::invalid_argument("symmetric_pareto needs a tail-index parameter");
        return make_symmetric_pareto(n, param, seed);
    }
    if (name == "exponential_product" || name == "laplace") return make_exponential_product(n, seed);
    if (name == "uniform_ball" || name == "ball") return make_uniform_ball(n, seed);
    if (name == "zero") return make_zero_stub(n, seed);
    throw std::invalid_argument("unknown model family: " + text);
}

double student_t_scale(double nu) {
    if (!(nu > 2.0)) throw std::invalid_argument("student_t requires nu > 2");
    return std::sqrt(nu / (nu - 2.0));
}

double pareto_threshold(double a) {
    if (!(a > 2.0)) throw std::invalid_argument("pareto tail index must exceed 2");
    return std::sqrt((a - 2.0) / a);
}

double uniform_ball_radius(int n) { return std::sqrt(static_cast<double>(n + 2)); }

Eigen::VectorXd sample_vector(const SamplerModel& model, RngStream& stream) {
    validate(model);
    const int n = model.dim;
    Eigen::VectorXd x(n);
    switch (model.family) {
        case Family::gaussian:
            for (int i = 0; i < n; ++i) x(i) = stream.next_gaussian();
            break;
        case Family::rademacher:
            for (int i = 0; i < n; ++i) x(i) = stream.next_sign_bit() ? -1.0 : 1.0;
            break;
        case Family::student_t:
            for (int i = 0; i < n; ++i) x(i) = draw_student_t(model.nu, stream);
            break;
        case Family::symmetric_pareto:
            for (int i = 0; i < n; ++i) x(i) = draw_pareto(model.tail_index, stream);
            break;
        case Family::exponential_product:
            for (int i = 0; i < n; ++i) x(i) = draw_laplace(stream);
            break;
        case Family::uniform_ball: {
            double norm2 = 0.0;
            do {
                for (int i = 0; i < n; ++i) x(i) = stream.next_gaussian();
                norm2 = x.squaredNorm();
            } while (norm2 == 0.0);
            const double r = uniform_ball_radius(n) *
                             std::pow(stream.next_open(), 1.0 / static_cast<double>(n));
            x *= r / std::sqrt(norm2);
            break;
        }
        case Family::zero_stub:
            x.setZero();
            break;
    }
    return x;
}

SampleBatch sample_batch(const SamplerModel& model, int m) {
    validate(model);
    if (m < 1) throw std::invalid_argument("sample count must be >= 1");
    SampleBatch batch;
    batch.model = model;
    batch.rows.resize(m, model.dim);
    RngStream stream = model.stream();
    for (int k = 0; k < m; ++k) {
        batch.rows.row(k) = sample_vector(model, stream).transpose();
    }
    batch.stream_draws = stream.counter();
    return batch;
}

Eigen::MatrixXd gram_matrix(const SampleBatch& batch) {
    if (batch.sample_count() < 1) throw std::invalid_argument("empty batch");
    const int n = batch.dim();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    a.selfadjointView<Eigen::Lower>().rankUpdate(batch.rows.transpose());
    Eigen::MatrixXd sym = a.selfadjointView<Eigen::Lower>();
    return sym;
}

Eigen::MatrixXd empirical_covariance(const SampleBatch& batch) {
    return gram_matrix(batch) / static_cast<double>(batch.sample_count());
}

}  // namespace mpedge
