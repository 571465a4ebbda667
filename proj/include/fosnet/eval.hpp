#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fosnet/dataset.hpp"
#include "fosnet/regressors.hpp"

namespace fosnet {

// Mean squared prediction error over observed subject-time pairs:
// sum mask_ij (Z_ij - pred_ij)^2 / sum mask_ij.
double msep(const Eigen::MatrixXd& pred, const FunctionalDataset& ds);

struct PairedTest {
    double t_stat = 0.0;
    double p_value = 1.0;
    bool zero_variance = false;
};

// Two-sided paired t-test of a against b. Zero-variance differences get the
// degenerate policy: p=1 when all differences vanish, p=0 otherwise, flagged.
PairedTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta and the Student-t CDF built on it.
double regularized_incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);

struct EvalReport {
    std::vector<double> per_rep_msep;
    double mean = 0.0;
    double sd = 0.0;
    std::optional<double> t_stat;
    std::optional<double> p_value;
    bool zero_variance = false;
    int completed_reps = 0;
    std::vector<std::string> errors;  // one entry per failed replicate
};

// R seeded 80/20 splits; every variant trains on identical splits; paired
// t-test of each variant's MSEPs against the FoS baseline when present.
std::map<Variant, EvalReport> repeated_holdout(const FunctionalDataset& ds,
                                               const std::vector<Variant>& variants,
                                               const std::map<Variant, FitConfig>& configs,
                                               int replicates, std::uint64_t seed,
                                               double train_fraction = 0.8, int jobs = 1);

enum class CvAxis { Subject, Time };

struct CvEntry {
    std::size_t config_index = 0;
    double mean_msep = 0.0;
    Eigen::Index parameter_count = 0;
};

struct GridSearchResult {
    FitConfig best;
    std::size_t best_index = 0;
    std::vector<CvEntry> table;
};

// Seeded k-fold CV over a config lattice. Subject axis partitions subjects;
// time axis masks a random 1/folds of grid points per fold as validation.
// Ties break toward fewer parameters, then earlier grid position.
GridSearchResult grid_search_cv(const FunctionalDataset& train, Variant variant,
                                const std::vector<FitConfig>& grid, int folds,
                                std::uint64_t seed, CvAxis axis = CvAxis::Subject);

}  // namespace fosnet
