#include "imret/feature_pipeline.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "imret/parallel.hpp"

namespace imret {

namespace {

double norm_of(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

FeatureVector l2_normalize(std::span<const double> v) {
    double n = norm_of(v);
    if (n == 0.0) throw DataError("cannot l2-normalize the zero vector");
    FeatureVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

PcaModel pca_fit(const FeatureSet& sample, std::size_t k) {
    const std::size_t n = sample.size();
    const std::size_t d = sample.dim();
    if (n < 2) throw DataError("pca_fit needs at least 2 samples, got " + std::to_string(n));
    if (k < 1 || k > d)
        throw DataError("pca_fit: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(d) + "]");

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        X(sample.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

    Eigen::VectorXd mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
    Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw ConvergenceError("pca_fit: eigendecomposition failed");

    // Eigen returns ascending eigenvalues; take the top k in descending order.
    PcaModel model;
    model.input_dim = d;
    model.output_dim = k;
    model.mean.assign(mean.data(), mean.data() + d);
    model.eigenvalues.resize(k);
    model.components.resize(k * d);
    for (std::size_t i = 0; i < k; ++i) {
        Eigen::Index src = static_cast<Eigen::Index>(d - 1 - i);
        double lambda = solver.eigenvalues()(src);
        model.eigenvalues[i] = lambda > 0 ? lambda : 0.0; // clamp tiny negatives
        Eigen::VectorXd axis = solver.eigenvectors().col(src);
        // Sign convention: largest-magnitude entry positive.
        Eigen::Index arg = 0;
        axis.cwiseAbs().maxCoeff(&arg);
        if (axis(arg) < 0) axis = -axis;
        for (std::size_t j = 0; j < d; ++j) model.components[i * d + j] = axis(j);
    }
    return model;
}

FeatureVector pca_project(std::span<const double> v, const PcaModel& m) {
    if (v.size() != m.input_dim)
        throw DataError("pca_project: vector dim " + std::to_string(v.size()) +
                        " != model dim " + std::to_string(m.input_dim));
    FeatureVector out(m.output_dim);
    for (std::size_t i = 0; i < m.output_dim; ++i) {
        auto axis = m.component(i);
        double acc = 0;
        for (std::size_t j = 0; j < m.input_dim; ++j)
            acc += (v[j] - m.mean[j]) * axis[j];
        out[i] = acc;
    }
    return out;
}

FeatureVector whiten(std::span<const double> p, const PcaModel& m, double epsilon) {
    if (p.size() != m.output_dim)
        throw DataError("whiten: vector dim " + std::to_string(p.size()) +
                        " != model output dim " + std::to_string(m.output_dim));
    FeatureVector out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        out[i] = p[i] / std::sqrt(m.eigenvalues[i] + epsilon);
    return out;
}

FeatureVector augment(std::span<const double> v, const PcaModel& m,
                      const AugmentOptions& opt) {
    FeatureVector unit = l2_normalize(v);
    FeatureVector proj = pca_project(unit, m);
    if (opt.whitening) proj = whiten(proj, m, opt.epsilon);
    return l2_normalize(proj);
}

FeatureSet augment_set(const FeatureSet& set, const PcaModel& m,
                       const AugmentOptions& opt, int workers) {
    std::vector<FeatureVector> rows(set.size());
    parallel_for(set.size(), workers,
                 [&](std::size_t i) { rows[i] = augment(set.row(i), m, opt); });
    FeatureSet out;
    for (std::size_t i = 0; i < set.size(); ++i) out.add(set.id(i), rows[i]);
    return out;
}

PcaModel load_pca_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad JSON: " + e.what());
    }

    PcaModel m;
    try {
        m.input_dim = j.at("d").get<std::size_t>();
        m.output_dim = j.at("k").get<std::size_t>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        const auto& rows = j.at("components");
        m.components.reserve(m.output_dim * m.input_dim);
        for (const auto& row : rows) {
            auto vals = row.get<std::vector<double>>();
            if (vals.size() != m.input_dim)
                throw DataError(path.string() + ": component row of dim " +
                                std::to_string(vals.size()) + ", expected " +
                                std::to_string(m.input_dim));
            m.components.insert(m.components.end(), vals.begin(), vals.end());
        }
        if (rows.size() != m.output_dim)
            throw DataError(path.string() + ": expected " + std::to_string(m.output_dim) +
                            " component rows, found " + std::to_string(rows.size()));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad model file: " + e.what());
    }
    if (m.output_dim < 1 || m.output_dim > m.input_dim ||
        m.mean.size() != m.input_dim || m.eigenvalues.size() != m.output_dim)
        throw DataError(path.string() + ": inconsistent model dimensions");
    for (std::size_t i = 1; i < m.eigenvalues.size(); ++i)
        if (m.eigenvalues[i] > m.eigenvalues[i - 1])
            throw DataError(path.string() + ": eigenvalues not sorted descending");
    return m;
}

void save_pca_model(const PcaModel& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["d"] = m.input_dim;
    j["k"] = m.output_dim;
    j["mean"] = m.mean;
    j["eigenvalues"] = m.eigenvalues;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.output_dim; ++i) {
        auto axis = m.component(i);
        rows.push_back(std::vector<double>(axis.begin(), axis.end()));
    }
    j["components"] = std::move(rows);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out << j.dump(1) << '\n'; // doubles serialize with round-trip precision
    if (!out) throw Error(path.string() + ": write failed");
}

} // namespace imret
