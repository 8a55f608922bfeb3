#include "afpca/simulate.hpp"

#include "afpca/errors.hpp"
#include "afpca/fpca.hpp"
#include "afpca/io.hpp"
#include "afpca/rng.hpp"
#include "afpca/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <utility>

namespace afpca {

namespace {

double raw_shape(double t, double freq) {
    if (t <= 0.5) return 0.0;
    return std::pow(t, -1.5) * std::sin(freq * M_PI * std::pow(t, 0.25));
}

// composite Simpson on [1/2, 1]; the integrand is smooth there
double integrate_tail(const std::function<double(double)>& f) {
    constexpr int n = 1 << 15;
    constexpr double a = 0.5;
    constexpr double b = 1.0;
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace

Eigen::VectorXd TruthSpec::mean_at(const Eigen::VectorXd& grid) const {
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) out[j] = mean(grid[j]);
    return out;
}

Eigen::VectorXd TruthSpec::fpc_at(int k, const Eigen::VectorXd& grid) const {
    const auto& f = k == 0 ? fpc1 : fpc2;
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) out[j] = f(grid[j]);
    return out;
}

TruthSpec true_functions(bool paper_constants) {
    TruthSpec spec;
    spec.paper_constants = paper_constants;

    spec.raw_integral_mean = integrate_tail([](double t) { return raw_shape(t, 1.0); });
    spec.raw_integral_fpc1 = integrate_tail([](double t) { return raw_shape(t, 4.0); });
    spec.raw_integral_fpc2 = integrate_tail([](double t) { return raw_shape(t, 8.0); });
    spec.l2_mean = std::sqrt(integrate_tail([](double t) {
        const double v = raw_shape(t, 1.0);
        return v * v;
    }));
    spec.l2_fpc1 = std::sqrt(integrate_tail([](double t) {
        const double v = raw_shape(t, 4.0);
        return v * v;
    }));
    spec.l2_fpc2 = std::sqrt(integrate_tail([](double t) {
        const double v = raw_shape(t, 8.0);
        return v * v;
    }));

    if (paper_constants) {
        const double cm = spec.raw_integral_mean;
        const double c1 = spec.raw_integral_fpc1;
        const double c2 = spec.raw_integral_fpc2;
        spec.mean = [cm](double t) { return cm * raw_shape(t, 1.0); };
        spec.fpc1 = [c1](double t) { return c1 * raw_shape(t, 4.0); };
        spec.fpc2 = [c2](double t) { return c2 * raw_shape(t, 8.0); };
        spec.cross_fpc12 = integrate_tail([&](double t) { return spec.fpc1(t) * spec.fpc2(t); });
        return spec;
    }

    const double nm = spec.l2_mean;
    const double n1 = spec.l2_fpc1;
    const double n2 = spec.l2_fpc2;
    spec.mean = [nm](double t) { return raw_shape(t, 1.0) / nm; };
    spec.fpc1 = [n1](double t) { return raw_shape(t, 4.0) / n1; };
    auto fpc2_unit = [n2](double t) { return raw_shape(t, 8.0) / n2; };
    const double cross =
        integrate_tail([&](double t) { return spec.fpc1(t) * fpc2_unit(t); });
    spec.cross_fpc12 = cross;
    if (std::abs(cross) > 1e-8) {
        const auto fpc1 = spec.fpc1;
        const double renorm = std::sqrt(1.0 - cross * cross);
        spec.fpc2 = [fpc1, fpc2_unit, cross, renorm](double t) {
            return (fpc2_unit(t) - cross * fpc1(t)) / renorm;
        };
    } else {
        spec.fpc2 = fpc2_unit;
    }
    return spec;
}

SimulatedData generate_dataset(int n_subjects, double sigma2, std::uint64_t seed,
                               int grid_size, const TruthSpec& truth) {
    if (n_subjects < 2) throw UsageError("need at least 2 subjects");
    if (!(sigma2 > 0.0)) throw UsageError("sigma2 must be positive");
    if (grid_size < 2) throw UsageError("grid size must be >= 2");

    SimulatedData sim;
    sim.grid = linspace(0.0, 1.0, grid_size);
    const Eigen::VectorXd mu = truth.mean_at(sim.grid);
    const Eigen::VectorXd p1 = truth.fpc_at(0, sim.grid);
    const Eigen::VectorXd p2 = truth.fpc_at(1, sim.grid);

    sim.scores.resize(n_subjects, 2);
    sim.noiseless.resize(n_subjects, grid_size);
    sim.data.a = 0.0;
    sim.data.b = 1.0;
    sim.data.subjects.resize(n_subjects);

    const double sd1 = std::sqrt(truth.score_var[0]);
    const double sd2 = std::sqrt(truth.score_var[1]);
    const double noise_sd = std::sqrt(sigma2);
    GaussianStream gauss(seed);
    for (int i = 0; i < n_subjects; ++i) {
        const double xi1 = sd1 * gauss.next();
        const double xi2 = sd2 * gauss.next();
        sim.scores(i, 0) = xi1;
        sim.scores(i, 1) = xi2;
        sim.noiseless.row(i) = (mu + xi1 * p1 + xi2 * p2).transpose();
        auto& subject = sim.data.subjects[i];
        subject.id = std::to_string(i + 1);
        subject.t = sim.grid;
        subject.y.resize(grid_size);
        for (int j = 0; j < grid_size; ++j)
            subject.y[j] = sim.noiseless(i, j) + noise_sd * gauss.next();
    }
    return sim;
}

SimulatedData generate_dataset(int n_subjects, double sigma2, std::uint64_t seed,
                               int grid_size) {
    return generate_dataset(n_subjects, sigma2, seed, grid_size, true_functions());
}

double ise(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
           const Eigen::VectorXd& grid) {
    if (estimate.size() != truth.size() || estimate.size() != grid.size())
        throw DataError("ISE inputs must share one grid");
    double total = 0.0;
    for (Eigen::Index j = 0; j + 1 < grid.size(); ++j) {
        const double e0 = estimate[j] - truth[j];
        const double e1 = estimate[j + 1] - truth[j + 1];
        total += 0.5 * (grid[j + 1] - grid[j]) * (e0 * e0 + e1 * e1);
    }
    return total;
}

double ise_sign_invariant(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth,
                          const Eigen::VectorXd& grid) {
    return std::min(ise(estimate, truth, grid), ise(-estimate, truth, grid));
}

Quartiles quartiles(std::vector<double> values) {
    Quartiles q;
    if (values.empty()) {
        q.q25 = q.median = q.q75 = std::numeric_limits<double>::quiet_NaN();
        return q;
    }
    std::sort(values.begin(), values.end());
    auto at = [&](double p) {
        const double h = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(h);
        if (lo + 1 >= values.size()) return values.back();
        return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
    };
    q.q25 = at(0.25);
    q.median = at(0.5);
    q.q75 = at(0.75);
    return q;
}

namespace {

StudyRow make_row(const std::string& method, int n_subjects, double sigma2, int replicate,
                  std::uint64_t seed) {
    StudyRow row;
    row.method = method;
    row.n_subjects = n_subjects;
    row.sigma2 = sigma2;
    row.replicate = replicate;
    row.seed = seed;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.ise_mean = row.ise_fpc1 = row.ise_fpc2 = nan;
    row.mise_recon = row.mise_observed = nan;
    return row;
}

std::string sanitize(std::string message) {
    for (char& c : message)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return message;
}

}  // namespace

StudyReport run_study(const StudyConfig& config) {
    if (config.replicates < 1) throw UsageError("replicates must be >= 1");
    if (config.grid_size < 2) throw UsageError("grid size must be >= 2");

    const TruthSpec truth = true_functions(config.paper_constants);
    StudyReport report;
    report.config = config;

    int cell = 0;
    for (int n_subjects : config.i_values) {
        for (double sigma2 : config.sigma2_values) {
            for (int rep = 0; rep < config.replicates; ++rep) {
                const std::uint64_t seed = derive_seed(config.base_seed, cell, rep);
                const SimulatedData sim =
                    generate_dataset(n_subjects, sigma2, seed, config.grid_size, truth);
                const Eigen::VectorXd mu_true = truth.mean_at(sim.grid);
                const Eigen::VectorXd p1_true = truth.fpc_at(0, sim.grid);
                const Eigen::VectorXd p2_true = truth.fpc_at(1, sim.grid);

                for (const auto mode : {FpcaMode::adaptive, FpcaMode::baseline}) {
                    StudyRow row = make_row(mode == FpcaMode::adaptive ? "adaptive" : "baseline",
                                            n_subjects, sigma2, rep, seed);
                    FpcaConfig fit_config;
                    fit_config.basis_dim = config.basis_dim;
                    fit_config.k_init = config.k_init;
                    fit_config.pve = config.pve;
                    fit_config.max_iter = config.max_iter;
                    fit_config.tol = config.tol;
                    fit_config.mode = mode;
                    fit_config.seed = seed;
                    const auto start = std::chrono::steady_clock::now();
                    try {
                        const FpcaModel model = fit_afpca(sim.data, fit_config);
                        row.k_selected = model.k();
                        row.ise_mean = ise(model.mean(sim.grid), mu_true, sim.grid);
                        const Eigen::MatrixXd phi = model.components(sim.grid);
                        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sim.grid.size());
                        row.ise_fpc1 = ise_sign_invariant(
                            model.k() >= 1 ? phi.col(0) : zero, p1_true, sim.grid);
                        row.ise_fpc2 = ise_sign_invariant(
                            model.k() >= 2 ? phi.col(1) : zero, p2_true, sim.grid);
                        double total_recon = 0.0;
                        double total_obs = 0.0;
                        for (int i = 0; i < n_subjects; ++i) {
                            const Eigen::VectorXd fit_i = model.reconstruct(i, sim.grid).values;
                            total_recon += ise(fit_i, sim.noiseless.row(i), sim.grid);
                            total_obs += ise(fit_i, sim.data.subjects[i].y, sim.grid);
                        }
                        row.mise_recon = total_recon / n_subjects;
                        row.mise_observed = total_obs / n_subjects;
                        if (config.dump_curves) {
                            row.curves.resize(sim.grid.size(), 1 + model.k());
                            row.curves.col(0) = model.mean(sim.grid);
                            row.curves.rightCols(model.k()) = phi;
                        }
                        row.ok = true;
                    } catch (const std::exception& e) {
                        row.ok = false;
                        row.error = sanitize(e.what());
                    }
                    row.runtime_seconds =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
                    report.rows.push_back(std::move(row));
                }
            }
            ++cell;
        }
    }

    for (int n_subjects : config.i_values) {
        for (double sigma2 : config.sigma2_values) {
            for (const char* method : {"adaptive", "baseline"}) {
                CellSummary cell_summary;
                cell_summary.method = method;
                cell_summary.n_subjects = n_subjects;
                cell_summary.sigma2 = sigma2;
                std::vector<double> v_mean, v_f1, v_f2, v_recon, v_obs, v_k;
                for (const auto& row : report.rows) {
                    if (!row.ok || row.method != method || row.n_subjects != n_subjects ||
                        row.sigma2 != sigma2)
                        continue;
                    ++cell_summary.n_ok;
                    v_mean.push_back(row.ise_mean);
                    v_f1.push_back(row.ise_fpc1);
                    v_f2.push_back(row.ise_fpc2);
                    v_recon.push_back(row.mise_recon);
                    v_obs.push_back(row.mise_observed);
                    v_k.push_back(row.k_selected);
                }
                cell_summary.ise_mean = quartiles(std::move(v_mean));
                cell_summary.ise_fpc1 = quartiles(std::move(v_f1));
                cell_summary.ise_fpc2 = quartiles(std::move(v_f2));
                cell_summary.mise_recon = quartiles(std::move(v_recon));
                cell_summary.mise_observed = quartiles(std::move(v_obs));
                cell_summary.k_selected = quartiles(std::move(v_k));
                report.cells.push_back(std::move(cell_summary));
            }
        }
    }
    return report;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

void write_report_csv(const StudyReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "method,n_subjects,sigma2,replicate,seed,status,error,"
           "ise_mean,ise_fpc1,ise_fpc2,mise_recon,mise_observed,k_selected\n";
    for (const auto& row : report.rows) {
        out << row.method << ',' << row.n_subjects << ',' << format_double(row.sigma2) << ','
            << row.replicate << ',' << row.seed << ',' << (row.ok ? "ok" : "failed") << ','
            << row.error << ',' << format_double(row.ise_mean) << ','
            << format_double(row.ise_fpc1) << ',' << format_double(row.ise_fpc2) << ','
            << format_double(row.mise_recon) << ',' << format_double(row.mise_observed) << ',';
        if (row.ok)
            out << row.k_selected;
        else
            out << "NA";
        out << '\n';
    }
}

void write_timings_csv(const StudyReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "method,n_subjects,sigma2,replicate,runtime_seconds\n";
    for (const auto& row : report.rows)
        out << row.method << ',' << row.n_subjects << ',' << format_double(row.sigma2) << ','
            << row.replicate << ',' << format_double(row.runtime_seconds) << '\n';
}

void write_summary_json(const StudyReport& report, const std::string& path) {
    nlohmann::json j;
    j["config"] = {{"i_values", report.config.i_values},
                   {"sigma2_values", report.config.sigma2_values},
                   {"replicates", report.config.replicates},
                   {"grid_size", report.config.grid_size},
                   {"basis_dim", report.config.basis_dim},
                   {"k_init", report.config.k_init},
                   {"pve", report.config.pve},
                   {"max_iter", report.config.max_iter},
                   {"tol", report.config.tol},
                   {"base_seed", report.config.base_seed},
                   {"paper_constants", report.config.paper_constants}};
    auto quartile_json = [](const Quartiles& q) {
        return nlohmann::json{{"q25", q.q25}, {"median", q.median}, {"q75", q.q75}};
    };
    j["cells"] = nlohmann::json::array();
    for (const auto& cell : report.cells) {
        nlohmann::json jc = {{"method", cell.method},
                             {"n_subjects", cell.n_subjects},
                             {"sigma2", cell.sigma2},
                             {"n_ok", cell.n_ok},
                             {"ise_mean", quartile_json(cell.ise_mean)},
                             {"ise_fpc1", quartile_json(cell.ise_fpc1)},
                             {"ise_fpc2", quartile_json(cell.ise_fpc2)},
                             {"mise_recon", quartile_json(cell.mise_recon)},
                             {"mise_observed", quartile_json(cell.mise_observed)},
                             {"k_selected", quartile_json(cell.k_selected)}};
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& row : report.rows) {
            if (!row.ok || row.method != cell.method || row.n_subjects != cell.n_subjects ||
                row.sigma2 != cell.sigma2)
                continue;
            const std::string key = std::to_string(row.k_selected);
            counts[key] = counts.value(key, 0) + 1;
        }
        jc["k_selected_counts"] = counts;
        j["cells"].push_back(std::move(jc));
    }
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_curves_csv(const StudyReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "method,n_subjects,sigma2,replicate,curve,t,value\n";
    const Eigen::VectorXd grid = linspace(0.0, 1.0, report.config.grid_size);
    for (const auto& row : report.rows) {
        if (!row.ok || row.curves.size() == 0) continue;
        for (int c = 0; c < row.curves.cols(); ++c) {
            const std::string name = c == 0 ? "mean" : "fpc" + std::to_string(c);
            for (Eigen::Index g = 0; g < grid.size(); ++g)
                out << row.method << ',' << row.n_subjects << ',' << format_double(row.sigma2)
                    << ',' << row.replicate << ',' << name << ',' << format_double(grid[g]) << ','
                    << format_double(row.curves(g, c)) << '\n';
        }
    }
}

}  // namespace afpca
