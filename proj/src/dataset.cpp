#include "fosnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "fosnet/rng.hpp"
#include "json_util.hpp"

namespace fosnet {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& cell, const std::string& context) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw std::invalid_argument(
            fmt::format("non-numeric cell '{}' in {}", cell, context));
    }
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

}  // namespace

void FunctionalDataset::validate() const {
    const auto n = predictors.rows();
    const auto m = grid.size();
    if (values.rows() != n || mask.rows() != n)
        throw std::invalid_argument("dataset: row count mismatch between predictors, values, mask");
    if (values.cols() != m || mask.cols() != m)
        throw std::invalid_argument("dataset: column count mismatch with grid");
    for (Eigen::Index j = 1; j < m; ++j) {
        if (!(grid(j) > grid(j - 1)))
            throw std::invalid_argument(
                fmt::format("dataset: grid not strictly increasing at index {}", j));
    }
    if (!predictors.allFinite())
        throw std::invalid_argument("dataset: non-finite predictor entry");
    bool all_ones = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double mij = mask(i, j);
            if (mij != 0.0 && mij != 1.0)
                throw std::invalid_argument("dataset: mask entries must be 0 or 1");
            if (mij == 1.0 && !std::isfinite(values(i, j)))
                throw std::invalid_argument(
                    fmt::format("dataset: non-finite observed value at subject {}, grid point {}", i, j));
            row_sum += mij;
            if (mij == 0.0) all_ones = false;
        }
        if (row_sum < 1.0)
            throw std::invalid_argument(
                fmt::format("dataset: subject {} has no observations", i));
    }
    if (regular != all_ones)
        throw std::invalid_argument("dataset: regular flag inconsistent with mask");
}

FunctionalDataset make_dataset(Eigen::MatrixXd predictors, Eigen::VectorXd grid,
                               Eigen::MatrixXd values, Eigen::MatrixXd mask,
                               std::vector<std::string> subject_ids) {
    FunctionalDataset ds;
    ds.predictors = std::move(predictors);
    ds.grid_orig = grid;
    const auto m = grid.size();
    if (m >= 2) {
        const double lo = grid(0), hi = grid(m - 1);
        if (!(hi > lo)) throw std::invalid_argument("dataset: degenerate time axis");
        ds.grid = (grid.array() - lo) / (hi - lo);
    } else {
        ds.grid = Eigen::VectorXd::Zero(m);
    }
    ds.values = std::move(values);
    ds.mask = std::move(mask);
    ds.regular = (ds.mask.array() == 1.0).all();
    if (subject_ids.empty()) {
        for (Eigen::Index i = 0; i < ds.predictors.rows(); ++i)
            subject_ids.push_back(std::to_string(i + 1));
    }
    ds.subject_ids = std::move(subject_ids);
    ds.validate();
    return ds;
}

FunctionalDataset load_dataset(const std::string& path, CsvFormat format) {
    if (format == CsvFormat::Wide) {
        const auto lines = read_lines(path);
        if (lines.size() < 2) throw std::invalid_argument("wide CSV: need a header and at least one row");
        const auto header = split_line(lines[0]);
        Eigen::Index p = 0;
        while (p < static_cast<Eigen::Index>(header.size()) &&
               header[p].rfind("t=", 0) != 0)
            ++p;
        const Eigen::Index m = static_cast<Eigen::Index>(header.size()) - p;
        if (p == 0 || m == 0)
            throw std::invalid_argument("wide CSV: header must be x1,...,xP,t=<v1>,...,t=<vm>");
        Eigen::VectorXd grid(m);
        for (Eigen::Index j = 0; j < m; ++j)
            grid(j) = parse_number(header[p + j].substr(2), "wide CSV header");

        const auto n = static_cast<Eigen::Index>(lines.size()) - 1;
        Eigen::MatrixXd predictors(n, p), values = Eigen::MatrixXd::Zero(n, m),
                        mask = Eigen::MatrixXd::Zero(n, m);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto cells = split_line(lines[i + 1]);
            if (static_cast<Eigen::Index>(cells.size()) != p + m)
                throw std::invalid_argument(
                    fmt::format("wide CSV: row {} has {} cells, expected {}", i + 2, cells.size(), p + m));
            for (Eigen::Index k = 0; k < p; ++k)
                predictors(i, k) = parse_number(cells[k], fmt::format("wide CSV row {}", i + 2));
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto& cell = cells[p + j];
                if (cell.empty()) continue;  // unobserved pair
                values(i, j) = parse_number(cell, fmt::format("wide CSV row {}", i + 2));
                mask(i, j) = 1.0;
            }
        }
        return make_dataset(std::move(predictors), std::move(grid), std::move(values), std::move(mask));
    }

    // Long format: directory with predictors.csv + observations.csv.
    namespace fs = std::filesystem;
    const auto pred_path = (fs::path(path) / "predictors.csv").string();
    const auto obs_path = (fs::path(path) / "observations.csv").string();

    const auto pred_lines = read_lines(pred_path);
    if (pred_lines.size() < 2) throw std::invalid_argument("predictors.csv: need a header and rows");
    const auto p = static_cast<Eigen::Index>(split_line(pred_lines[0]).size()) - 1;
    if (p < 1) throw std::invalid_argument("predictors.csv: need subject_id plus predictor columns");
    const auto n = static_cast<Eigen::Index>(pred_lines.size()) - 1;
    Eigen::MatrixXd predictors(n, p);
    std::vector<std::string> subject_ids(n);
    std::map<std::string, Eigen::Index> subject_index;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto cells = split_line(pred_lines[i + 1]);
        if (static_cast<Eigen::Index>(cells.size()) != p + 1)
            throw std::invalid_argument(fmt::format("predictors.csv: row {} malformed", i + 2));
        subject_ids[i] = cells[0];
        if (!subject_index.emplace(cells[0], i).second)
            throw std::invalid_argument("predictors.csv: duplicate subject_id " + cells[0]);
        for (Eigen::Index k = 0; k < p; ++k)
            predictors(i, k) = parse_number(cells[k + 1], fmt::format("predictors.csv row {}", i + 2));
    }

    const auto obs_lines = read_lines(obs_path);
    if (obs_lines.size() < 2) throw std::invalid_argument("observations.csv: need a header and rows");
    struct Obs { Eigen::Index subject; double time; double value; };
    std::vector<Obs> observations;
    std::set<std::pair<Eigen::Index, double>> seen;
    std::set<double> time_set;
    for (std::size_t r = 1; r < obs_lines.size(); ++r) {
        const auto cells = split_line(obs_lines[r]);
        if (cells.size() != 3)
            throw std::invalid_argument(fmt::format("observations.csv: row {} malformed", r + 1));
        const auto it = subject_index.find(cells[0]);
        if (it == subject_index.end())
            throw std::invalid_argument(
                fmt::format("observations.csv: subject '{}' (row {}) not in predictors.csv", cells[0], r + 1));
        const double t = parse_number(cells[1], fmt::format("observations.csv row {}", r + 1));
        const double v = parse_number(cells[2], fmt::format("observations.csv row {}", r + 1));
        if (!seen.emplace(it->second, t).second)
            throw std::invalid_argument(fmt::format(
                "observations.csv: duplicate (subject, time) pair ({}, {}) at row {}", cells[0], t, r + 1));
        observations.push_back({it->second, t, v});
        time_set.insert(t);
    }

    const auto m = static_cast<Eigen::Index>(time_set.size());
    Eigen::VectorXd grid(m);
    std::map<double, Eigen::Index> grid_index;
    {
        Eigen::Index j = 0;
        for (const double t : time_set) {
            grid(j) = t;
            grid_index[t] = j;
            ++j;
        }
    }
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, m), mask = Eigen::MatrixXd::Zero(n, m);
    for (const auto& obs : observations) {
        const auto j = grid_index.at(obs.time);
        values(obs.subject, j) = obs.value;
        mask(obs.subject, j) = 1.0;
    }
    return make_dataset(std::move(predictors), std::move(grid), std::move(values), std::move(mask),
                        std::move(subject_ids));
}

void save_dataset(const FunctionalDataset& ds, const std::string& path, CsvFormat format) {
    if (format == CsvFormat::Wide) {
        std::ofstream out(path);
        if (!out) throw std::invalid_argument("cannot write file: " + path);
        for (Eigen::Index k = 0; k < ds.n_predictors(); ++k) out << "x" << (k + 1) << ",";
        for (Eigen::Index j = 0; j < ds.grid_size(); ++j)
            out << "t=" << fmt::format("{}", ds.grid_orig(j)) << (j + 1 < ds.grid_size() ? "," : "\n");
        for (Eigen::Index i = 0; i < ds.n_subjects(); ++i) {
            for (Eigen::Index k = 0; k < ds.n_predictors(); ++k)
                out << fmt::format("{}", ds.predictors(i, k)) << ",";
            for (Eigen::Index j = 0; j < ds.grid_size(); ++j) {
                if (ds.mask(i, j) == 1.0) out << fmt::format("{}", ds.values(i, j));
                out << (j + 1 < ds.grid_size() ? "," : "\n");
            }
        }
        return;
    }

    namespace fs = std::filesystem;
    fs::create_directories(path);
    std::ofstream pred_out((fs::path(path) / "predictors.csv").string());
    pred_out << "subject_id";
    for (Eigen::Index k = 0; k < ds.n_predictors(); ++k) pred_out << ",x" << (k + 1);
    pred_out << "\n";
    for (Eigen::Index i = 0; i < ds.n_subjects(); ++i) {
        pred_out << ds.subject_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < ds.n_predictors(); ++k)
            pred_out << "," << fmt::format("{}", ds.predictors(i, k));
        pred_out << "\n";
    }
    std::ofstream obs_out((fs::path(path) / "observations.csv").string());
    obs_out << "subject_id,time,value\n";
    for (Eigen::Index i = 0; i < ds.n_subjects(); ++i) {
        for (Eigen::Index j = 0; j < ds.grid_size(); ++j) {
            if (ds.mask(i, j) != 1.0) continue;
            obs_out << ds.subject_ids[static_cast<std::size_t>(i)] << ","
                    << fmt::format("{}", ds.grid_orig(j)) << ","
                    << fmt::format("{}", ds.values(i, j)) << "\n";
        }
    }
}

nlohmann::json dataset_to_json(const FunctionalDataset& ds) {
    nlohmann::json j;
    j["predictors"] = detail::matrix_to_json(ds.predictors);
    j["grid"] = std::vector<double>(ds.grid.data(), ds.grid.data() + ds.grid.size());
    j["values"] = detail::matrix_to_json(ds.values);
    j["mask"] = detail::matrix_to_json(ds.mask);
    j["regular"] = ds.regular;
    j["grid_orig"] = std::vector<double>(ds.grid_orig.data(), ds.grid_orig.data() + ds.grid_orig.size());
    j["subject_ids"] = ds.subject_ids;
    return j;
}

FunctionalDataset dataset_from_json(const nlohmann::json& j) {
    FunctionalDataset ds;
    ds.predictors = detail::matrix_from_json(j.at("predictors"));
    const auto g = j.at("grid").get<std::vector<double>>();
    ds.grid = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    ds.values = detail::matrix_from_json(j.at("values"));
    ds.mask = detail::matrix_from_json(j.at("mask"));
    ds.regular = j.at("regular").get<bool>();
    const auto go = j.at("grid_orig").get<std::vector<double>>();
    ds.grid_orig = Eigen::Map<const Eigen::VectorXd>(go.data(), static_cast<Eigen::Index>(go.size()));
    ds.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
    ds.validate();
    return ds;
}

FunctionalDataset subset(const FunctionalDataset& ds, const std::vector<Eigen::Index>& rows) {
    FunctionalDataset out;
    const auto n = static_cast<Eigen::Index>(rows.size());
    out.predictors.resize(n, ds.n_predictors());
    out.values.resize(n, ds.grid_size());
    out.mask.resize(n, ds.grid_size());
    out.subject_ids.reserve(rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = rows[static_cast<std::size_t>(i)];
        out.predictors.row(i) = ds.predictors.row(r);
        out.values.row(i) = ds.values.row(r);
        out.mask.row(i) = ds.mask.row(r);
        out.subject_ids.push_back(ds.subject_ids[static_cast<std::size_t>(r)]);
    }
    out.grid = ds.grid;
    out.grid_orig = ds.grid_orig;
    out.regular = (out.mask.array() == 1.0).all();
    out.validate();
    return out;
}

std::pair<FunctionalDataset, FunctionalDataset> split(const FunctionalDataset& ds,
                                                      double train_fraction,
                                                      std::uint64_t seed) {
    const auto n = ds.n_subjects();
    if (n < 2) throw std::invalid_argument("split: need at least 2 subjects");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must be in (0,1)");
    auto n_train = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(n) * train_fraction));
    n_train = std::max<Eigen::Index>(1, std::min(n_train, n - 1));

    std::vector<Eigen::Index> indices(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), Eigen::Index{0});
    Rng rng(seed);
    rng.shuffle(indices);
    const std::vector<Eigen::Index> train_rows(indices.begin(), indices.begin() + n_train);
    const std::vector<Eigen::Index> test_rows(indices.begin() + n_train, indices.end());
    return {subset(ds, train_rows), subset(ds, test_rows)};
}

}  // namespace fosnet
