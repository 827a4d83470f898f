#include "padspace/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "padspace/csv.hpp"
#include "padspace/error.hpp"
#include "padspace/rng.hpp"

using nlohmann::json;

namespace padspace {

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

int argmax_lowest_tie(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = i;
    }
    return best;
}

struct Adam {
    Eigen::MatrixXd m, v;
    void init(Eigen::Index rows, Eigen::Index cols) {
        m.setZero(rows, cols);
        v.setZero(rows, cols);
    }
    void step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad,
              const TrainConfig& cfg, long t) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v = cfg.beta2 * v.array().matrix() +
            (1.0 - cfg.beta2) * grad.array().square().matrix();
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        param.array() -= cfg.learning_rate * (m.array() / bc1) /
                         ((v.array() / bc2).sqrt() + cfg.adam_eps);
    }
};

json matrix_to_json(const Eigen::MatrixXd& m) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
    }
    return arr;
}

Eigen::MatrixXd matrix_from_json(const json& arr, Eigen::Index rows,
                                 Eigen::Index cols, const char* name) {
    if (!arr.is_array() ||
        arr.size() != static_cast<std::size_t>(rows * cols)) {
        throw DataError(std::string("model.json: bad size for ") + name);
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = arr[i++].get<double>();
        }
    }
    return m;
}

}  // namespace

InputNormalizer InputNormalizer::identity(int dim) {
    InputNormalizer n;
    n.mean.setZero(dim);
    n.scale.setOnes(dim);
    return n;
}

InputNormalizer InputNormalizer::fit(const Eigen::MatrixXd& features) {
    if (features.rows() == 0) throw DataError("cannot fit normalizer on empty set");
    InputNormalizer n;
    n.mean = features.colwise().mean();
    n.scale.resize(features.cols());
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
        const double var =
            (features.col(c).array() - n.mean(c)).square().mean();
        const double sd = std::sqrt(var);
        n.scale(c) = sd > 1e-12 ? sd : 1.0;  // constant dims pass through
    }
    return n;
}

Eigen::VectorXd InputNormalizer::apply(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) {
        throw DataError("feature dimension mismatch: got " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(mean.size()));
    }
    return (x - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd InputNormalizer::apply_rows(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out.row(r) = apply(x.row(r).transpose()).transpose();
    }
    return out;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw DataError("epochs must be >= 0");
    if (batch_size < 1) throw DataError("batch_size must be >= 1");
    if (learning_rate <= 0) throw DataError("learning_rate must be > 0");
}

MlpModel init_model(int input_dim, const LabelRegistry& registry,
                    const InputNormalizer& normalizer, std::uint64_t seed) {
    if (registry.size() < 2) {
        throw DataError("need >= 2 classes, got " +
                        std::to_string(registry.size()));
    }
    if (normalizer.mean.size() != input_dim) {
        throw DataError("normalizer dimension mismatch");
    }
    Rng rng(seed, RngStream::kClassifierInit);
    MlpModel model;
    model.registry = registry;
    model.normalizer = normalizer;
    const int c = registry.size();

    auto he_init = [&](Eigen::MatrixXd& w, int rows, int cols) {
        w.resize(rows, cols);
        const double sd = std::sqrt(2.0 / cols);
        for (int r = 0; r < rows; ++r) {
            for (int col = 0; col < cols; ++col) w(r, col) = rng.normal(0, sd);
        }
    };
    he_init(model.w1, kHiddenDim, input_dim);
    he_init(model.w2, kEmbedDim, kHiddenDim);
    model.w3.setZero(c, kEmbedDim);  // zero head: untrained output is uniform
    model.b1.setZero(kHiddenDim);
    model.b2.setZero(kEmbedDim);
    model.b3.setZero(c);
    return model;
}

Gradients loss_and_gradients(const MlpModel& model,
                             const Eigen::MatrixXd& batch,
                             const std::vector<int>& label_ids) {
    const auto n = batch.rows();
    if (n == 0 || static_cast<std::size_t>(n) != label_ids.size()) {
        throw DataError("batch rows do not match labels");
    }
    if (batch.cols() != model.w1.cols()) {
        throw DataError("feature dimension mismatch: got " +
                        std::to_string(batch.cols()) + ", expected " +
                        std::to_string(model.w1.cols()));
    }

    // forward
    Eigen::MatrixXd z1 = (model.w1 * batch.transpose()).colwise() + model.b1;
    Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
    Eigen::MatrixXd emb = (model.w2 * h1).colwise() + model.b2;
    Eigen::MatrixXd logits = (model.w3 * emb).colwise() + model.b3;

    Gradients g;
    Eigen::MatrixXd dlogits(logits.rows(), logits.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd p = softmax(logits.col(i));
        const int y = label_ids[static_cast<std::size_t>(i)];
        if (y < 0 || y >= model.num_classes()) {
            throw DataError("label id out of range: " + std::to_string(y));
        }
        loss -= std::log(std::max(p(y), 1e-300));
        dlogits.col(i) = p;
        dlogits(y, i) -= 1.0;
    }
    loss /= static_cast<double>(n);
    dlogits /= static_cast<double>(n);

    // backward
    g.w3 = dlogits * emb.transpose();
    g.b3 = dlogits.rowwise().sum();
    Eigen::MatrixXd demb = model.w3.transpose() * dlogits;
    g.w2 = demb * h1.transpose();
    g.b2 = demb.rowwise().sum();
    Eigen::MatrixXd dh1 = model.w2.transpose() * demb;
    Eigen::MatrixXd dz1 =
        (z1.array() > 0.0).select(dh1, Eigen::MatrixXd::Zero(dh1.rows(), dh1.cols()));
    g.w1 = dz1 * batch;
    g.b1 = dz1.rowwise().sum();
    g.loss = loss;
    return g;
}

TrainResult train_classifier(const Eigen::MatrixXd& features,
                             const std::vector<int>& label_ids,
                             const LabelRegistry& registry,
                             const InputNormalizer& normalizer,
                             const TrainConfig& cfg) {
    cfg.validate();
    if (features.rows() == 0 ||
        static_cast<std::size_t>(features.rows()) != label_ids.size()) {
        throw DataError("features and labels must be nonempty and equal length");
    }
    const std::set<int> distinct(label_ids.begin(), label_ids.end());
    if (distinct.size() < 2) {
        throw DataError("need >= 2 classes in the training set, got " +
                        std::to_string(distinct.size()));
    }

    TrainResult result;
    result.model = init_model(static_cast<int>(features.cols()), registry,
                              normalizer, cfg.seed);
    MlpModel& model = result.model;

    Adam a_w1, a_b1, a_w2, a_b2, a_w3, a_b3;
    a_w1.init(model.w1.rows(), model.w1.cols());
    a_b1.init(model.b1.size(), 1);
    a_w2.init(model.w2.rows(), model.w2.cols());
    a_b2.init(model.b2.size(), 1);
    a_w3.init(model.w3.rows(), model.w3.cols());
    a_b3.init(model.b3.size(), 1);

    Rng shuffle_rng(cfg.seed, RngStream::kClassifierShuffle);
    std::vector<std::size_t> order(static_cast<std::size_t>(features.rows()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(
                order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const auto bsize = static_cast<Eigen::Index>(end - start);
            Eigen::MatrixXd batch(bsize, features.cols());
            std::vector<int> batch_labels(static_cast<std::size_t>(bsize));
            for (Eigen::Index i = 0; i < bsize; ++i) {
                const std::size_t src = order[start + static_cast<std::size_t>(i)];
                batch.row(i) = features.row(static_cast<Eigen::Index>(src));
                batch_labels[static_cast<std::size_t>(i)] = label_ids[src];
            }
            const Gradients g = loss_and_gradients(model, batch, batch_labels);
            if (!std::isfinite(g.loss)) {
                throw DataError("non-finite training loss at epoch " +
                                std::to_string(epoch));
            }
            epoch_loss += g.loss * static_cast<double>(bsize);
            ++step;
            a_w1.step(model.w1, g.w1, cfg, step);
            a_b1.step(model.b1, g.b1, cfg, step);
            a_w2.step(model.w2, g.w2, cfg, step);
            a_b2.step(model.b2, g.b2, cfg, step);
            a_w3.step(model.w3, g.w3, cfg, step);
            a_b3.step(model.b3, g.b3, cfg, step);
        }
        result.loss_trace.push_back(epoch_loss /
                                    static_cast<double>(features.rows()));
    }
    return result;
}

Eigen::VectorXd embed(const MlpModel& model, const Eigen::VectorXd& feature) {
    const Eigen::VectorXd x = model.normalizer.apply(feature);
    const Eigen::VectorXd h1 = ((model.w1 * x) + model.b1).cwiseMax(0.0);
    return (model.w2 * h1) + model.b2;
}

Classification classify(const MlpModel& model, const Eigen::VectorXd& feature) {
    const Eigen::VectorXd x = model.normalizer.apply(feature);
    const Eigen::VectorXd h1 = ((model.w1 * x) + model.b1).cwiseMax(0.0);
    const Eigen::VectorXd emb = (model.w2 * h1) + model.b2;
    const Eigen::VectorXd logits = (model.w3 * emb) + model.b3;
    Classification out;
    out.probabilities = softmax(logits);
    out.label_id = argmax_lowest_tie(out.probabilities);
    return out;
}

double evaluate_accuracy(const MlpModel& model, const Eigen::MatrixXd& features,
                         const std::vector<int>& label_ids) {
    if (features.rows() == 0 ||
        static_cast<std::size_t>(features.rows()) != label_ids.size()) {
        throw DataError("cannot evaluate on an empty or mismatched set");
    }
    int correct = 0;
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const Classification c = classify(model, features.row(i).transpose());
        if (c.label_id == label_ids[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(features.rows());
}

void save_model(const std::string& path, const MlpModel& model) {
    json doc;
    doc["schema_version"] = 1;
    doc["input_dim"] = model.input_dim();
    doc["hidden_dim"] = kHiddenDim;
    doc["embed_dim"] = kEmbedDim;
    doc["labels"] = model.registry.labels();
    doc["norm_mean"] = matrix_to_json(model.normalizer.mean);
    doc["norm_scale"] = matrix_to_json(model.normalizer.scale);
    doc["w1"] = matrix_to_json(model.w1);
    doc["b1"] = matrix_to_json(model.b1);
    doc["w2"] = matrix_to_json(model.w2);
    doc["b2"] = matrix_to_json(model.b2);
    doc["w3"] = matrix_to_json(model.w3);
    doc["b3"] = matrix_to_json(model.b3);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("failed writing model file: " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("model.json parse error: " + std::string(e.what()));
    }
    if (doc.value("schema_version", 0) != 1) {
        throw DataError("model.json: unsupported schema_version");
    }
    const int in_dim = doc.at("input_dim").get<int>();
    if (doc.at("hidden_dim").get<int>() != kHiddenDim ||
        doc.at("embed_dim").get<int>() != kEmbedDim) {
        throw DataError("model.json: unexpected layer dimensions");
    }
    MlpModel model;
    model.registry =
        LabelRegistry(doc.at("labels").get<std::vector<std::string>>());
    const int c = model.registry.size();
    if (c < 2) throw DataError("model.json: needs >= 2 labels");
    model.normalizer.mean =
        matrix_from_json(doc.at("norm_mean"), in_dim, 1, "norm_mean");
    model.normalizer.scale =
        matrix_from_json(doc.at("norm_scale"), in_dim, 1, "norm_scale");
    model.w1 = matrix_from_json(doc.at("w1"), kHiddenDim, in_dim, "w1");
    model.b1 = matrix_from_json(doc.at("b1"), kHiddenDim, 1, "b1");
    model.w2 = matrix_from_json(doc.at("w2"), kEmbedDim, kHiddenDim, "w2");
    model.b2 = matrix_from_json(doc.at("b2"), kEmbedDim, 1, "b2");
    model.w3 = matrix_from_json(doc.at("w3"), c, kEmbedDim, "w3");
    model.b3 = matrix_from_json(doc.at("b3"), c, 1, "b3");
    for (const auto& m : {model.w1, model.w2, model.w3}) {
        if (!m.allFinite()) throw DataError("model.json: non-finite parameters");
    }
    return model;
}

void write_loss_trace(const std::string& path,
                      const std::vector<double>& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write loss trace: " + path);
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << i << ',' << csv::format_g17(trace[i]) << '\n';
    }
}

}  // namespace padspace
