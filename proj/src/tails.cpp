#include "mpedge/tails.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mpedge {

namespace {

double binomial_stderr(double p, int trials) {
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / trials);
}

void print_row(std::ostream& os, const TailCell& c) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.10g,%.10g,%.10g,%.10g,%d\n", c.model.c_str(), c.n,
                  c.r, c.t, c.p_hat, c.std_err, c.bound, c.pass ? 1 : 0);
    os << buf;
}

std::pair<double, double> tail_frequency(const SamplerModel& model, const ProjectionSpec& proj,
                                         double t, int trials, RngStream& stream) {
    const int block = 2048;
    Eigen::MatrixXd rows(block, model.dim);
    long hits = 0;
    int done = 0;
    while (done < trials) {
        const int b = std::min(block, trials - done);
        for (int k = 0; k < b; ++k) rows.row(k) = sample_vector(model, stream).transpose();
        const Eigen::MatrixXd proj_coords = rows.topRows(b) * proj.basis;
        for (int k = 0; k < b; ++k) {
            if (proj_coords.row(k).squaredNorm() - proj.rank >= t) ++hits;
        }
        done += b;
    }
    const double p = static_cast<double>(hits) / trials;
    return {p, binomial_stderr(p, trials)};
}

}  // namespace

ProjectionSpec random_projection(int n, int r, std::uint64_t seed) {
    if (r < 1 || r > n) throw std::invalid_argument("projection rank must lie in [1, n]");
    RngStream stream = RngStream(seed).split(0x70);
    Eigen::MatrixXd frame(n, r);
    for (int j = 0; j < r; ++j) {
        for (int i = 0; i < n; ++i) frame(i, j) = stream.next_gaussian();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
    ProjectionSpec spec;
    spec.dim = n;
    spec.rank = r;
    spec.basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
    spec.provenance = "haar(seed=" + std::to_string(seed) + ")";
    return spec;
}

ProjectionSpec coordinate_projection(int n, const std::vector<int>& coords) {
    if (coords.empty() || static_cast<int>(coords.size()) > n) {
        throw std::invalid_argument("coordinate set size must lie in [1, n]");
    }
    ProjectionSpec spec;
    spec.dim = n;
    spec.rank = static_cast<int>(coords.size());
    spec.basis = Eigen::MatrixXd::Zero(n, spec.rank);
    for (int j = 0; j < spec.rank; ++j) {
        if (coords[j] < 0 || coords[j] >= n) throw std::invalid_argument("coordinate out of range");
        spec.basis(coords[j], j) = 1.0;
    }
    spec.provenance = "coords";
    return spec;
}

TailFunctions TailFunctions::defaults() {
    TailFunctions t;
    t.f = [](int r) { return std::pow(static_cast<double>(r), -0.25); };
    t.g = [](int r) { return 10.0 / std::sqrt(static_cast<double>(r)); };
    return t;
}

bool TailReport::all_pass() const {
    return std::all_of(cells.begin(), cells.end(), [](const TailCell& c) { return c.pass; });
}

void TailReport::write_csv(std::ostream& os) const {
    os << "model,n,r,t,p_hat,stderr,bound,pass\n";
    for (const auto& c : cells) print_row(os, c);
}

std::pair<double, double> estimate_projection_tail(const SamplerModel& model,
                                                   const ProjectionSpec& proj, double t,
                                                   int trials) {
    if (trials < 100) throw std::invalid_argument("need at least 100 trials");
    if (!(t > 0.0)) throw std::invalid_argument("threshold must be positive");
    if (proj.dim != model.dim) throw std::invalid_argument("projection/model dimension mismatch");
    RngStream stream = model.stream().split(0x7a11);
    return tail_frequency(model, proj, t, trials, stream);
}

TailReport check_stp(const SamplerModel& model, const std::vector<int>& ranks,
                     const std::vector<double>& t_factors, int trials,
                     const TailFunctions& tails) {
    if (ranks.empty() || t_factors.empty()) throw std::invalid_argument("empty grid");
    for (int r : ranks) {
        for (double factor : t_factors) {
            if (factor < tails.f(r)) {
                throw std::invalid_argument("threshold below f(r) r is outside the tail-bound domain");
            }
        }
    }
    TailReport report;
    std::uint64_t cell = 0;
    for (int r : ranks) {
        const ProjectionSpec proj = random_projection(model.dim, r, model.seed ^ (0x9e37u + r));
        for (double factor : t_factors) {
            const double t = factor * r;
            RngStream stream = model.stream().split(0x57b0 + cell++);
            auto [p, se] = tail_frequency(model, proj, t, trials, stream);
            TailCell c;
            c.model = model.family_name();
            c.n = model.dim;
            c.r = r;
            c.t = t;
            c.p_hat = p;
            c.std_err = se;
            c.bound = tails.g(r) * r / (t * t);
            c.pass = p <= c.bound + 3.0 * se;
            report.cells.push_back(c);
        }
    }
    return report;
}

void UniformIntegrabilityReport::write_csv(std::ostream& os) const {
    os << "n,M,sup_estimate,argmax_direction\n";
    for (const auto& row : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%s\n", row.n, row.M, row.sup_estimate,
                      row.argmax_direction.c_str());
        os << buf;
    }
}

UniformIntegrabilityReport check_wtp_a(const SamplerModel& base, const std::vector<int>& n_grid,
                                       const std::vector<double>& M_grid, int directions_per_n,
                                       int trials) {
    if (n_grid.empty() || M_grid.empty()) throw std::invalid_argument("empty grid");
    if (!std::is_sorted(M_grid.begin(), M_grid.end())) {
        throw std::invalid_argument("M grid must be increasing");
    }
    UniformIntegrabilityReport report;
    for (int n : n_grid) {
        const SamplerModel model = base.with_dim(n);
        std::vector<Eigen::VectorXd> directions;
        std::vector<std::string> labels;
        directions.push_back(Eigen::VectorXd::Unit(n, 0));
        labels.push_back("coordinate");
        directions.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n))));
        labels.push_back("diagonal");
        RngStream dir_stream = model.stream().split(0xd1);
        for (int d = 0; d < directions_per_n; ++d) {
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) y(i) = dir_stream.next_gaussian();
            y.normalize();
            directions.push_back(y);
            labels.push_back("haar" + std::to_string(d));
        }

        const int dirs = static_cast<int>(directions.size());
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(dirs, static_cast<int>(M_grid.size()));
        RngStream stream = model.stream().split(0xa2);
        for (int k = 0; k < trials; ++k) {
            const Eigen::VectorXd x = sample_vector(model, stream);
            for (int d = 0; d < dirs; ++d) {
                const double v = directions[d].dot(x);
                const double v2 = v * v;
                for (std::size_t mi = 0; mi < M_grid.size(); ++mi) {
                    if (v2 >= M_grid[mi]) sums(d, static_cast<int>(mi)) += v2;
                }
            }
        }
        for (std::size_t mi = 0; mi < M_grid.size(); ++mi) {
            int argmax = 0;
            double best = -1.0;
            for (int d = 0; d < dirs; ++d) {
                const double est = sums(d, static_cast<int>(mi)) / trials;
                if (est > best) {
                    best = est;
                    argmax = d;
                }
            }
            report.rows.push_back({n, M_grid[mi], best, labels[argmax]});
        }
    }
    return report;
}

DecouplingReport decoupled_moment_check(const SamplerModel& model, const ProjectionSpec& proj,
                                        int trials) {
    if (!model.iid_coordinates()) {
        throw std::invalid_argument("decoupling bounds assume iid coordinates");
    }
    if (proj.dim != model.dim) throw std::invalid_argument("projection/model dimension mismatch");
    const int r = proj.rank;
    const Eigen::VectorXd diag = proj.diagonal();
    const double tail_level = std::pow(static_cast<double>(r), 0.75);

    RngStream stream = model.stream().split(0xdc);
    double sum = 0.0, sum_sq = 0.0;
    long hits = 0;
    for (int k = 0; k < trials; ++k) {
        const Eigen::VectorXd x = sample_vector(model, stream);
        const double full = (proj.basis.transpose() * x).squaredNorm();
        const double hollow = full - diag.dot(x.cwiseProduct(x));
        const double sq = hollow * hollow;
        sum += sq;
        sum_sq += sq * sq;
        if (std::abs(hollow) > tail_level) ++hits;
    }

    DecouplingReport rep;
    rep.n = model.dim;
    rep.r = r;
    rep.trials = trials;
    rep.second_moment = sum / trials;
    const double var = std::max(sum_sq / trials - rep.second_moment * rep.second_moment, 0.0);
    rep.second_moment_stderr = std::sqrt(var / trials);
    rep.second_moment_bound = 64.0 * r;
    rep.tail_freq = static_cast<double>(hits) / trials;
    rep.tail_stderr = binomial_stderr(rep.tail_freq, trials);
    rep.tail_bound = 64.0 / std::sqrt(static_cast<double>(r));
    rep.pass_second = rep.second_moment <= rep.second_moment_bound + 3.0 * rep.second_moment_stderr;
    rep.pass_tail = rep.tail_freq <= rep.tail_bound + 3.0 * rep.tail_stderr;
    return rep;
}

}  // namespace mpedge
