#include "fosnet/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/core.h>

#include "fosnet/rng.hpp"

namespace fosnet {

double msep(const Eigen::MatrixXd& pred, const FunctionalDataset& ds) {
    if (pred.rows() != ds.n_subjects() || pred.cols() != ds.grid_size())
        throw std::invalid_argument(fmt::format(
            "msep: prediction shape {}x{} does not match dataset {}x{}", pred.rows(),
            pred.cols(), ds.n_subjects(), ds.grid_size()));
    const double denom = ds.mask.sum();
    const Eigen::MatrixXd resid = (pred - ds.values).cwiseProduct(ds.mask);
    return resid.squaredNorm() / denom;
}

// Continued-fraction evaluation (modified Lentz); converges to ~1e-15 for
// the t-test arguments used here.
double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
        b * std::log1p(-x);
    const bool swap = x > (a + 1.0) / (a + b + 2.0);
    const double aa = swap ? b : a;
    const double bb = swap ? a : b;
    const double xx = swap ? 1.0 - x : x;

    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (aa + bb) * xx / (aa + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int i = 1; i <= 400; ++i) {
        const int m2 = 2 * i;
        double num = i * (bb - i) * xx / ((aa + m2 - 1.0) * (aa + m2));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(aa + i) * (aa + bb + i) * xx / ((aa + m2) * (aa + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    const double front = swap ? std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                    aa * std::log(xx) + bb * std::log1p(-xx)
                              : ln_front;
    const double result = std::exp(front) * h / aa;
    return swap ? 1.0 - result : result;
}

double student_t_cdf(double t, double dof) {
    if (!std::isfinite(t)) return t > 0 ? 1.0 : 0.0;
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

PairedTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("paired_ttest: need >= 2 matching pairs");
    const auto n = static_cast<double>(a.size());
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
    double ss = 0.0;
    for (const double d : diffs) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (n - 1.0));

    PairedTest result;
    if (sd == 0.0) {
        result.zero_variance = true;
        if (mean == 0.0) {
            result.t_stat = 0.0;
            result.p_value = 1.0;
        } else {
            result.t_stat = mean > 0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
            result.p_value = 0.0;
        }
        return result;
    }
    result.t_stat = mean / (sd / std::sqrt(n));
    result.p_value = 2.0 * (1.0 - student_t_cdf(std::abs(result.t_stat), n - 1.0));
    result.p_value = std::clamp(result.p_value, 0.0, 1.0);
    return result;
}

namespace {

void run_indexed_jobs(int count, int jobs, const std::function<void(int)>& work) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

std::map<Variant, EvalReport> repeated_holdout(const FunctionalDataset& ds,
                                               const std::vector<Variant>& variants,
                                               const std::map<Variant, FitConfig>& configs,
                                               int replicates, std::uint64_t seed,
                                               double train_fraction, int jobs) {
    if (replicates < 2) throw std::invalid_argument("repeated_holdout: need >= 2 replicates");

    const Rng root(seed);
    struct RepOutcome {
        std::map<Variant, double> msep_by_variant;
        std::string error;
        bool ok = false;
    };
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(replicates));

    run_indexed_jobs(replicates, jobs, [&](int r) {
        auto& outcome = outcomes[static_cast<std::size_t>(r)];
        try {
            const auto split_seed =
                root.substream("split").substream(static_cast<std::uint64_t>(r)).next_u64();
            const auto [train_ds, test_ds] = split(ds, train_fraction, split_seed);
            const Rng rep_rng = root.substream("fit").substream(static_cast<std::uint64_t>(r));
            for (const Variant v : variants) {
                FitConfig cfg = configs.at(v);
                cfg.seed = rep_rng.substream(to_string(v)).next_u64();
                const auto model = fit(v, train_ds, cfg);
                const auto pred = predict(model, test_ds.predictors, test_ds.grid);
                outcome.msep_by_variant[v] = msep(pred, test_ds);
            }
            outcome.ok = true;
        } catch (const std::exception& e) {
            outcome.error = fmt::format("replicate {}: {}", r, e.what());
        }
    });

    std::map<Variant, EvalReport> reports;
    std::vector<std::string> errors;
    for (const auto& outcome : outcomes)
        if (!outcome.ok) errors.push_back(outcome.error);

    for (const Variant v : variants) {
        EvalReport report;
        report.errors = errors;
        for (const auto& outcome : outcomes)
            if (outcome.ok) report.per_rep_msep.push_back(outcome.msep_by_variant.at(v));
        report.completed_reps = static_cast<int>(report.per_rep_msep.size());
        if (report.completed_reps > 0) {
            const auto n = static_cast<double>(report.completed_reps);
            report.mean =
                std::accumulate(report.per_rep_msep.begin(), report.per_rep_msep.end(), 0.0) / n;
            double ss = 0.0;
            for (const double x : report.per_rep_msep) ss += (x - report.mean) * (x - report.mean);
            report.sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        }
        reports[v] = std::move(report);
    }

    // paired test against the FoS baseline
    const auto fos_it = reports.find(Variant::Fos);
    if (fos_it != reports.end() && fos_it->second.completed_reps >= 2) {
        for (auto& [v, report] : reports) {
            if (v == Variant::Fos) continue;
            const auto test = paired_ttest(report.per_rep_msep, fos_it->second.per_rep_msep);
            report.t_stat = test.t_stat;
            report.p_value = test.p_value;
            report.zero_variance = test.zero_variance;
        }
    }
    return reports;
}

namespace {

Eigen::Index config_parameter_count(Variant variant, const FitConfig& cfg, Eigen::Index p) {
    if (variant == Variant::Fos) return (p + 1) * cfg.num_basis;
    // score variants: output width is data-dependent (K_tau); counted as the
    // hidden stack only, which still orders nested architectures correctly
    const bool coefficient = variant == Variant::Nnbb || variant == Variant::Nnbr;
    Eigen::Index count = 0;
    Eigen::Index prev = p;
    for (const int h : cfg.hidden) {
        count += prev * h + h;
        prev = h;
    }
    if (coefficient) count += prev * cfg.num_basis + cfg.num_basis;
    return count;
}

}  // namespace

GridSearchResult grid_search_cv(const FunctionalDataset& train, Variant variant,
                                const std::vector<FitConfig>& grid, int folds,
                                std::uint64_t seed, CvAxis axis) {
    if (grid.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
    if (folds < 2) throw std::invalid_argument("grid_search_cv: need >= 2 folds");

    const Rng root(seed);

    // fold assignment, shared by every grid point
    std::vector<int> subject_fold, time_fold;
    if (axis == CvAxis::Subject) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(train.n_subjects()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Rng rng = root.substream("folds");
        rng.shuffle(order);
        subject_fold.resize(order.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            subject_fold[static_cast<std::size_t>(order[i])] = static_cast<int>(i) % folds;
    } else {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(train.grid_size()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        Rng rng = root.substream("folds");
        rng.shuffle(order);
        time_fold.resize(order.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            time_fold[static_cast<std::size_t>(order[i])] = static_cast<int>(i) % folds;
    }

    GridSearchResult result;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total = 0.0;
        for (int f = 0; f < folds; ++f) {
            FitConfig cfg = grid[g];
            cfg.seed = root.substream("fit")
                           .substream(static_cast<std::uint64_t>(g * folds + f))
                           .next_u64();
            if (axis == CvAxis::Subject) {
                std::vector<Eigen::Index> fit_rows, val_rows;
                for (Eigen::Index i = 0; i < train.n_subjects(); ++i) {
                    if (subject_fold[static_cast<std::size_t>(i)] == f)
                        val_rows.push_back(i);
                    else
                        fit_rows.push_back(i);
                }
                if (fit_rows.empty() || val_rows.empty())
                    throw std::invalid_argument("grid_search_cv: empty fold; reduce folds");
                const auto fit_ds = subset(train, fit_rows);
                const auto val_ds = subset(train, val_rows);
                const auto model = fit(variant, fit_ds, cfg);
                total += msep(predict(model, val_ds.predictors, val_ds.grid), val_ds);
            } else {
                // hold out a set of grid columns: masked during fitting,
                // scored on the held-out observed entries only
                FunctionalDataset fit_ds = train;
                FunctionalDataset val_ds = train;
                for (Eigen::Index j = 0; j < train.grid_size(); ++j) {
                    if (time_fold[static_cast<std::size_t>(j)] == f)
                        fit_ds.mask.col(j).setZero();
                    else
                        val_ds.mask.col(j).setZero();
                }
                fit_ds.regular = false;
                val_ds.regular = (val_ds.mask.array() == 1.0).all();
                fit_ds.validate();
                if (val_ds.mask.sum() == 0.0)
                    throw std::invalid_argument("grid_search_cv: empty time fold");
                const auto model = fit(variant, fit_ds, cfg);
                const auto pred = predict(model, val_ds.predictors, val_ds.grid);
                const Eigen::MatrixXd resid = (pred - val_ds.values).cwiseProduct(val_ds.mask);
                total += resid.squaredNorm() / val_ds.mask.sum();
            }
        }
        CvEntry entry;
        entry.config_index = g;
        entry.mean_msep = total / folds;
        entry.parameter_count = config_parameter_count(variant, grid[g], train.n_predictors());
        result.table.push_back(entry);
    }

    const auto best = std::min_element(
        result.table.begin(), result.table.end(), [](const CvEntry& a, const CvEntry& b) {
            if (a.mean_msep != b.mean_msep) return a.mean_msep < b.mean_msep;
            if (a.parameter_count != b.parameter_count)
                return a.parameter_count < b.parameter_count;
            return a.config_index < b.config_index;
        });
    result.best_index = best->config_index;
    result.best = grid[best->config_index];
    return result;
}

}  // namespace fosnet
