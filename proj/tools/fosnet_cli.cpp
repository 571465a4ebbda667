#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "fosnet/dataset.hpp"
#include "fosnet/eval.hpp"
#include "fosnet/fpca.hpp"
#include "fosnet/regressors.hpp"
#include "fosnet/rng.hpp"
#include "fosnet/simgen.hpp"
#include "fosnet/smoothing.hpp"

namespace fs = std::filesystem;
using namespace fosnet;

namespace {

std::string num(double v) { return fmt::format("{}", v); }

FunctionalDataset load_any(const std::string& path) {
    if (fs::is_directory(path)) {
        if (fs::exists(fs::path(path) / "predictors.csv"))
            return load_dataset(path, CsvFormat::Long);
        if (fs::exists(fs::path(path) / "data.csv"))
            return load_dataset((fs::path(path) / "data.csv").string(), CsvFormat::Wide);
        throw std::invalid_argument(
            fmt::format("{}: no data.csv or predictors.csv/observations.csv found", path));
    }
    return load_dataset(path, CsvFormat::Wide);
}

std::string subject_label(const FunctionalDataset& ds, Eigen::Index i) {
    if (i < static_cast<Eigen::Index>(ds.subject_ids.size()))
        return ds.subject_ids[static_cast<std::size_t>(i)];
    return std::to_string(i + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty integer list: " + s);
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty list: " + s);
    return out;
}

// One CSV or headered column of times.
Eigen::VectorXd read_times(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open times file: " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used == tok.size()) vals.push_back(v);
            } catch (const std::exception&) {
                // header token; skip
            }
        }
    }
    if (vals.empty()) throw std::invalid_argument("no numeric times in " + path);
    Eigen::VectorXd t(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) t(static_cast<Eigen::Index>(i)) = vals[i];
    return t;
}

Eigen::MatrixXd read_predictor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open predictor file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty predictor file: " + path);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("no predictor rows in " + path);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::invalid_argument("ragged predictor rows in " + path);
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return x;
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Hyperparameter flags shared by train / evaluate / cv / reproduce.
struct NetFlags {
    int kb = 13;
    int order = 4;
    double tau = 0.99;
    std::string layers = "50,30";
    std::string activation = "relu";
    std::string output_activation = "identity";
    std::string optimizer = "adam";
    double lr = 1e-3;
    int epochs = 500;
    int batch = 32;
    std::string penalty = "none";
    double lambda = 0.0;
    int quad = 101;
    bool standardize = false;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--kb", kb, "number of basis functions");
        cmd->add_option("--order", order, "B-spline order");
        cmd->add_option("--tau", tau, "FPCA explained-variance threshold");
        cmd->add_option("--layers", layers, "hidden layer sizes, e.g. 50,30");
        cmd->add_option("--activation", activation, "hidden activation");
        cmd->add_option("--output-activation", output_activation, "output activation");
        cmd->add_option("--optimizer", optimizer, "adam or sgd");
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--batch", batch, "minibatch size");
        cmd->add_option("--penalty", penalty, "none, curvature, or coeffdiff");
        cmd->add_option("--lambda", lambda, "penalty weight");
        cmd->add_option("--quad", quad, "quadrature points for the curvature penalty");
        cmd->add_flag("--standardize", standardize, "z-score predictors for the network");
        cmd->add_option("--seed", seed, "root seed");
    }

    FitConfig to_config() const {
        FitConfig cfg;
        cfg.num_basis = kb;
        cfg.basis_order = order;
        cfg.tau = tau;
        cfg.hidden = parse_int_list(layers);
        cfg.hidden_activation = activation_from_string(activation);
        cfg.output_activation = activation_from_string(output_activation);
        if (optimizer == "adam")
            cfg.optimizer = Optimizer::Adam;
        else if (optimizer == "sgd")
            cfg.optimizer = Optimizer::Sgd;
        else
            throw std::invalid_argument("unknown optimizer: " + optimizer);
        cfg.learning_rate = lr;
        cfg.epochs = epochs;
        cfg.batch_size = batch;
        cfg.penalty = penalty_from_string(penalty);
        cfg.lambda = lambda;
        cfg.quad_points = quad;
        cfg.standardize = standardize;
        cfg.seed = seed;
        return cfg;
    }
};

void check_penalty_compatibility(Variant variant, const FitConfig& cfg, double lambda_flag) {
    const bool response_trained = variant == Variant::Nnbr || variant == Variant::Nnsr;
    if (!response_trained && (cfg.penalty != PenaltyKind::None || lambda_flag != 0.0))
        throw std::invalid_argument(fmt::format(
            "{}: roughness penalty/lambda incompatible; smoothing happens when the curve "
            "representation is fitted a priori", to_string(variant)));
}

std::string report_csv(const std::map<Variant, EvalReport>& reports,
                       const std::vector<Variant>& order) {
    std::string out = "variant,rep,msep\n";
    for (const Variant v : order) {
        const auto& rep = reports.at(v);
        for (std::size_t r = 0; r < rep.per_rep_msep.size(); ++r)
            out += fmt::format("{},{},{}\n", to_string(v), r + 1, rep.per_rep_msep[r]);
    }
    return out;
}

nlohmann::json report_summary(const std::map<Variant, EvalReport>& reports,
                              const std::vector<Variant>& order) {
    nlohmann::json j = nlohmann::json::object();
    for (const Variant v : order) {
        const auto& rep = reports.at(v);
        nlohmann::json r;
        r["mean"] = rep.mean;
        r["sd"] = rep.sd;
        r["completed_reps"] = rep.completed_reps;
        r["per_rep_msep"] = rep.per_rep_msep;
        if (rep.t_stat) r["t_stat"] = *rep.t_stat;
        if (rep.p_value) r["p_value"] = *rep.p_value;
        r["zero_variance"] = rep.zero_variance;
        if (!rep.errors.empty()) r["errors"] = rep.errors;
        j[to_string(v)] = std::move(r);
    }
    return j;
}

int resolve_jobs(int flag_jobs) {
    if (const char* env = std::getenv("FOSNET_JOBS")) {
        const int j = std::atoi(env);
        if (j >= 1) return j;
    }
    if (flag_jobs >= 1) return flag_jobs;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<Variant> parse_variants(const std::string& s) {
    std::vector<Variant> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(variant_from_string(tok));
    }
    if (out.empty()) throw std::invalid_argument("no variants given");
    return out;
}

// ---- subcommand bodies -------------------------------------------------

struct SimulateArgs {
    int design = 1;
    int n = 2000;
    int p = 20;
    int m = 40;
    double noise_var = 2.0;
    std::uint64_t seed = 0;
    std::string out;
};

void run_simulate(const SimulateArgs& a) {
    SimConfig cfg;
    cfg.design = a.design;
    cfg.n_subjects = a.n;
    cfg.n_predictors = a.p;
    cfg.grid_size = a.m;
    cfg.noise_var = a.noise_var;
    cfg.seed = a.seed;
    const auto [ds, truth] = generate(cfg);
    fs::create_directories(a.out);
    save_dataset(ds, (fs::path(a.out) / "data.csv").string(), CsvFormat::Wide);
    write_text(fs::path(a.out) / "truth.json", truth_to_json(truth).dump(2) + "\n");
}

struct DataOutArgs {
    std::string data;
    std::string out;
    NetFlags flags;
};

void run_smooth(const DataOutArgs& a) {
    const auto ds = load_any(a.data);
    const auto bs = make_basis(ds.grid(0), ds.grid(ds.grid_size() - 1), a.flags.kb,
                               a.flags.order);
    const auto fit = fit_coefficients(ds, bs);
    std::string csv = "subject_id";
    for (int k = 1; k <= a.flags.kb; ++k) csv += fmt::format(",c_{}", k);
    csv += "\n";
    for (Eigen::Index i = 0; i < ds.n_subjects(); ++i) {
        csv += subject_label(ds, i);
        for (int k = 0; k < a.flags.kb; ++k) csv += "," + num(fit.coeffs(i, k));
        csv += "\n";
    }
    write_text(a.out, csv);
}

void run_fpca(const DataOutArgs& a) {
    const auto ds = load_any(a.data);
    const auto model = fit_fpca(ds, a.flags.tau);
    fs::create_directories(a.out);

    std::string mean_csv = "time,mean\n";
    for (Eigen::Index j = 0; j < model.grid.size(); ++j)
        mean_csv += num(model.grid(j)) + "," + num(model.mean(j)) + "\n";
    write_text(fs::path(a.out) / "mean.csv", mean_csv);

    std::string ev_csv = "component,eigenvalue\n";
    for (int k = 0; k < model.num_components; ++k)
        ev_csv += fmt::format("{},{}\n", k + 1, model.eigenvalues(k));
    write_text(fs::path(a.out) / "eigenvalues.csv", ev_csv);

    std::string ef_csv = "time";
    for (int k = 1; k <= model.num_components; ++k) ef_csv += fmt::format(",phi_{}", k);
    ef_csv += "\n";
    for (Eigen::Index j = 0; j < model.grid.size(); ++j) {
        ef_csv += num(model.grid(j));
        for (int k = 0; k < model.num_components; ++k)
            ef_csv += "," + num(model.eigenfunctions(k, j));
        ef_csv += "\n";
    }
    write_text(fs::path(a.out) / "eigenfunctions.csv", ef_csv);

    const auto xi = scores(model, ds);
    std::string sc_csv = "subject_id";
    for (int k = 1; k <= model.num_components; ++k) sc_csv += fmt::format(",xi_{}", k);
    sc_csv += "\n";
    for (Eigen::Index i = 0; i < ds.n_subjects(); ++i) {
        sc_csv += subject_label(ds, i);
        for (int k = 0; k < model.num_components; ++k) sc_csv += "," + num(xi(i, k));
        sc_csv += "\n";
    }
    write_text(fs::path(a.out) / "scores.csv", sc_csv);
}

struct TrainArgs {
    std::string variant;
    std::string data;
    std::string out;
    NetFlags flags;
};

void run_train(const TrainArgs& a) {
    const Variant variant = variant_from_string(a.variant);
    const FitConfig cfg = a.flags.to_config();
    check_penalty_compatibility(variant, cfg, a.flags.lambda);
    const auto ds = load_any(a.data);
    const auto model = fit(variant, ds, cfg);
    write_text(a.out, regressor_to_json(model).dump(2) + "\n");
}

struct PredictArgs {
    std::string model;
    std::string x;
    std::string times;
    std::string out;
};

void run_predict(const PredictArgs& a) {
    std::ifstream in(a.model);
    if (!in) throw std::invalid_argument("cannot open model file: " + a.model);
    nlohmann::json j;
    in >> j;
    const auto model = regressor_from_json(j);
    const Eigen::MatrixXd x = read_predictor_csv(a.x);
    const Eigen::VectorXd times = read_times(a.times);
    const auto pred = predict(model, x, times);

    std::string csv;
    for (Eigen::Index t = 0; t < times.size(); ++t) {
        if (t) csv += ",";
        csv += "t=" + num(times(t));
    }
    csv += "\n";
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        for (Eigen::Index t = 0; t < pred.cols(); ++t) {
            if (t) csv += ",";
            csv += num(pred(i, t));
        }
        csv += "\n";
    }
    write_text(a.out, csv);
}

struct EvaluateArgs {
    std::string data;
    std::string variants = "fos,nnbb,nnss,nnbr,nnsr";
    int reps = 20;
    double train_fraction = 0.8;
    int jobs = 0;
    std::string out;
    NetFlags flags;
};

void run_evaluate(const EvaluateArgs& a) {
    const auto variant_list = parse_variants(a.variants);
    const FitConfig base = a.flags.to_config();
    std::map<Variant, FitConfig> configs;
    for (const Variant v : variant_list) {
        FitConfig cfg = base;
        if (v != Variant::Nnbr && v != Variant::Nnsr) {
            cfg.penalty = PenaltyKind::None;
            cfg.lambda = 0.0;
        }
        configs[v] = cfg;
    }
    const auto ds = load_any(a.data);
    const auto reports = repeated_holdout(ds, variant_list, configs, a.reps, a.flags.seed,
                                          a.train_fraction, resolve_jobs(a.jobs));
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.csv", report_csv(reports, variant_list));
    write_text(fs::path(a.out) / "summary.json",
               report_summary(reports, variant_list).dump(2) + "\n");
}

struct CvArgs {
    std::string data;
    std::string variant = "fos";
    std::string kb_grid;
    std::string lambda_grid;
    std::string lr_grid;
    int folds = 5;
    std::string axis = "subject";
    std::string out;
    NetFlags flags;
};

void run_cv(const CvArgs& a) {
    const Variant variant = variant_from_string(a.variant);
    const FitConfig base = a.flags.to_config();
    check_penalty_compatibility(variant, base, a.flags.lambda);

    const std::vector<int> kbs = a.kb_grid.empty() ? std::vector<int>{base.num_basis}
                                                   : parse_int_list(a.kb_grid);
    const std::vector<double> lambdas = a.lambda_grid.empty()
                                            ? std::vector<double>{base.lambda}
                                            : parse_double_list(a.lambda_grid);
    const std::vector<double> lrs = a.lr_grid.empty()
                                        ? std::vector<double>{base.learning_rate}
                                        : parse_double_list(a.lr_grid);
    std::vector<FitConfig> grid;
    for (const int kb : kbs)
        for (const double lambda : lambdas)
            for (const double lr : lrs) {
                FitConfig cfg = base;
                cfg.num_basis = kb;
                cfg.lambda = lambda;
                cfg.learning_rate = lr;
                grid.push_back(cfg);
            }

    CvAxis axis;
    if (a.axis == "subject")
        axis = CvAxis::Subject;
    else if (a.axis == "time")
        axis = CvAxis::Time;
    else
        throw std::invalid_argument("unknown --cv-axis: " + a.axis);

    const auto ds = load_any(a.data);
    const auto result = grid_search_cv(ds, variant, grid, a.folds, a.flags.seed, axis);

    std::string csv = "config_index,kb,lambda,lr,parameter_count,mean_msep,selected\n";
    for (const auto& row : result.table) {
        const auto& cfg = grid[row.config_index];
        csv += fmt::format("{},{},{},{},{},{},{}\n", row.config_index, cfg.num_basis,
                           cfg.lambda, cfg.learning_rate, row.parameter_count, row.mean_msep,
                           row.config_index == result.best_index ? 1 : 0);
    }
    write_text(a.out, csv);
}

struct ReproduceArgs {
    int design = 1;
    int reps = 20;
    int n = 2000;
    int jobs = 0;
    std::string out = "reproduce-out";
    NetFlags flags;
};

// Defaults used by `reproduce` when the user does not override them: tuned so
// the simulation tables come out with the documented orderings in reasonable
// wall time.
NetFlags reproduce_defaults() {
    NetFlags f;
    f.epochs = 300;
    f.standardize = true;
    return f;
}

void run_reproduce(const ReproduceArgs& a) {
    SimConfig sim;
    sim.design = a.design;
    sim.n_subjects = a.n;
    sim.seed = Rng(a.flags.seed).substream("data").next_u64();
    const auto [ds, truth] = generate(sim);

    const std::vector<Variant> variants{Variant::Fos, Variant::Nnbb, Variant::Nnss,
                                        Variant::Nnbr, Variant::Nnsr};
    const FitConfig base = a.flags.to_config();
    std::map<Variant, FitConfig> configs;
    for (const Variant v : variants) {
        FitConfig cfg = base;
        cfg.seed = Rng(a.flags.seed).substream("fit").next_u64();
        if (v != Variant::Nnbr && v != Variant::Nnsr) {
            cfg.penalty = PenaltyKind::None;
            cfg.lambda = 0.0;
        }
        configs[v] = cfg;
    }

    const auto reports = repeated_holdout(ds, variants, configs, a.reps,
                                          Rng(a.flags.seed).substream("split").next_u64(), 0.8,
                                          resolve_jobs(a.jobs));
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "report.csv", report_csv(reports, variants));
    write_text(fs::path(a.out) / "summary.json",
               report_summary(reports, variants).dump(2) + "\n");

    nlohmann::json manifest;
    manifest["tool"] = "fosnet";
    manifest["version"] = "1.0.0";
    manifest["command"] = "reproduce";
    manifest["design"] = a.design;
    manifest["replicates"] = a.reps;
    manifest["n_subjects"] = a.n;
    manifest["seed"] = a.flags.seed;
    manifest["train_fraction"] = 0.8;
    nlohmann::json cfgs = nlohmann::json::object();
    for (const auto& [v, cfg] : configs) {
        nlohmann::json c;
        c["num_basis"] = cfg.num_basis;
        c["basis_order"] = cfg.basis_order;
        c["tau"] = cfg.tau;
        c["hidden"] = cfg.hidden;
        c["hidden_activation"] = to_string(cfg.hidden_activation);
        c["output_activation"] = to_string(cfg.output_activation);
        c["optimizer"] = cfg.optimizer == Optimizer::Adam ? "adam" : "sgd";
        c["learning_rate"] = cfg.learning_rate;
        c["epochs"] = cfg.epochs;
        c["batch_size"] = cfg.batch_size;
        c["penalty"] = to_string(cfg.penalty);
        c["lambda"] = cfg.lambda;
        c["quad_points"] = cfg.quad_points;
        c["standardize"] = cfg.standardize;
        c["seed"] = cfg.seed;
        cfgs[to_string(v)] = std::move(c);
    }
    manifest["configs"] = std::move(cfgs);
    write_text(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");
}

struct BenchArgs {
    std::string p_list = "10,20,40,80";
    int n = 500;
    std::string out;
    NetFlags flags;
};

void run_bench(const BenchArgs& a) {
    std::string csv = "p,fos_seconds,nn_seconds\n";
    for (const int p : parse_int_list(a.p_list)) {
        SimConfig sim;
        sim.design = 3;
        sim.n_subjects = a.n;
        sim.n_predictors = p;
        sim.seed = a.flags.seed;
        const auto [ds, truth] = generate(sim);

        FitConfig cfg = a.flags.to_config();
        cfg.epochs = std::min(cfg.epochs, 50);

        const auto t0 = std::chrono::steady_clock::now();
        fit(Variant::Fos, ds, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        fit(Variant::Nnbb, ds, cfg);
        const auto t2 = std::chrono::steady_clock::now();

        const double fos_s = std::chrono::duration<double>(t1 - t0).count();
        const double nn_s = std::chrono::duration<double>(t2 - t1).count();
        csv += fmt::format("{},{},{}\n", p, fos_s, nn_s);
    }
    if (a.out.empty())
        fmt::print("{}", csv);
    else
        write_text(a.out, csv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Function-on-scalar regression with neural networks"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a simulation-design dataset");
    sim_cmd->add_option("--design", sim_args.design, "design id 1-4")->required();
    sim_cmd->add_option("--n", sim_args.n, "number of subjects");
    sim_cmd->add_option("--p", sim_args.p, "number of predictors");
    sim_cmd->add_option("--m", sim_args.m, "grid size");
    sim_cmd->add_option("--noise-var", sim_args.noise_var, "observation noise variance");
    sim_cmd->add_option("--seed", sim_args.seed, "seed");
    sim_cmd->add_option("--out", sim_args.out, "output directory")->required();

    DataOutArgs smooth_args;
    auto* smooth_cmd = app.add_subcommand("smooth", "per-subject basis coefficients");
    smooth_cmd->add_option("--data", smooth_args.data, "dataset file or directory")->required();
    smooth_cmd->add_option("--out", smooth_args.out, "output CSV")->required();
    smooth_args.flags.attach(smooth_cmd);

    DataOutArgs fpca_args;
    auto* fpca_cmd = app.add_subcommand("fpca", "functional PCA of the responses");
    fpca_cmd->add_option("--data", fpca_args.data, "dataset file or directory")->required();
    fpca_cmd->add_option("--out", fpca_args.out, "output directory")->required();
    fpca_args.flags.attach(fpca_cmd);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "fit one model variant");
    train_cmd->add_option("--variant", train_args.variant, "fos, nnbb, nnss, nnbr, nnsr")
        ->required();
    train_cmd->add_option("--data", train_args.data, "dataset file or directory")->required();
    train_cmd->add_option("--out", train_args.out, "model JSON path")->required();
    train_args.flags.attach(train_cmd);

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "predict curves from a saved model");
    predict_cmd->add_option("--model", predict_args.model, "model JSON")->required();
    predict_cmd->add_option("--x", predict_args.x, "predictor CSV (header x1..xP)")->required();
    predict_cmd->add_option("--times", predict_args.times, "times CSV")->required();
    predict_cmd->add_option("--out", predict_args.out, "prediction CSV")->required();

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "repeated holdout comparison");
    eval_cmd->add_option("--data", eval_args.data, "dataset file or directory")->required();
    eval_cmd->add_option("--variants", eval_args.variants, "comma-separated variant list");
    eval_cmd->add_option("--reps", eval_args.reps, "replicates");
    eval_cmd->add_option("--train-fraction", eval_args.train_fraction, "train split fraction");
    eval_cmd->add_option("--jobs", eval_args.jobs, "worker threads (default: cores)");
    eval_cmd->add_option("--out", eval_args.out, "output directory")->required();
    eval_args.flags.attach(eval_cmd);

    CvArgs cv_args;
    auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation grid search");
    cv_cmd->add_option("--data", cv_args.data, "dataset file or directory")->required();
    cv_cmd->add_option("--variant", cv_args.variant, "variant to tune");
    cv_cmd->add_option("--kb-grid", cv_args.kb_grid, "comma-separated basis sizes");
    cv_cmd->add_option("--lambda-grid", cv_args.lambda_grid, "comma-separated penalty weights");
    cv_cmd->add_option("--lr-grid", cv_args.lr_grid, "comma-separated learning rates");
    cv_cmd->add_option("--folds", cv_args.folds, "number of folds");
    cv_cmd->add_option("--cv-axis", cv_args.axis, "subject or time");
    cv_cmd->add_option("--out", cv_args.out, "CV table CSV")->required();
    cv_args.flags.attach(cv_cmd);

    ReproduceArgs repro_args;
    repro_args.flags = reproduce_defaults();
    auto* repro_cmd = app.add_subcommand("reproduce", "end-to-end simulation table");
    repro_cmd->add_option("--design", repro_args.design, "design id 1-4")->required();
    repro_cmd->add_option("--reps", repro_args.reps, "replicates");
    repro_cmd->add_option("--n", repro_args.n, "number of subjects");
    repro_cmd->add_option("--jobs", repro_args.jobs, "worker threads (default: cores)");
    repro_cmd->add_option("--out", repro_args.out, "output directory");
    repro_args.flags.attach(repro_cmd);

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "wall-clock scaling of FoS vs NN fits");
    bench_cmd->add_option("--p-list", bench_args.p_list, "comma-separated predictor counts");
    bench_cmd->add_option("--n", bench_args.n, "subjects per benchmark");
    bench_cmd->add_option("--out", bench_args.out, "output CSV (default stdout)");
    bench_args.flags.attach(bench_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad usage is a configuration error
    }

    try {
        if (sim_cmd->parsed()) run_simulate(sim_args);
        if (smooth_cmd->parsed()) run_smooth(smooth_args);
        if (fpca_cmd->parsed()) run_fpca(fpca_args);
        if (train_cmd->parsed()) run_train(train_args);
        if (predict_cmd->parsed()) run_predict(predict_args);
        if (eval_cmd->parsed()) run_evaluate(eval_args);
        if (cv_cmd->parsed()) run_cv(cv_args);
        if (repro_cmd->parsed()) run_reproduce(repro_args);
        if (bench_cmd->parsed()) run_bench(bench_args);
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
