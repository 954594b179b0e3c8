#include "gcnwp/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "csv.hpp"
#include "gcnwp/error.hpp"
#include "gcnwp/kernels.hpp"

namespace gcnwp {

namespace {

std::size_t basis_size(const TrainConfig& c) {
    return c.propagator_kind == PropagatorKind::chebyshev
               ? static_cast<std::size_t>(c.chebyshev_degree) + 1
               : 1;
}

void add_inplace(Matrix& acc, const Matrix& m) {
    auto& a = acc.values();
    const auto& b = m.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void hadamard_inplace(Matrix& acc, const Matrix& m) {
    auto& a = acc.values();
    const auto& b = m.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
}

// Log-softmax over the two classes of one row.
std::pair<double, double> log_softmax2(double z0, double z1) {
    const double m = std::max(z0, z1);
    const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
    return {z0 - lse, z1 - lse};
}

std::size_t check_mask(const std::vector<int>& labels, const std::vector<bool>& mask,
                       std::size_t rows) {
    if (labels.size() != rows || mask.size() != rows)
        throw ContractError("labels/mask length does not match node count");
    std::size_t m = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (!mask[i]) continue;
        if (labels[i] != 0 && labels[i] != 1)
            throw ContractError("masked node without a binary label");
        ++m;
    }
    if (m == 0) throw ContractError("no labeled nodes");
    return m;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be a non-negative finite number");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (chebyshev_degree < 0) throw ConfigError("chebyshev degree must be >= 0");
    for (auto h : hidden_dims)
        if (h == 0) throw ConfigError("hidden layer width must be >= 1");
}

int TrainConfig::receptive_hops() const {
    const int per_layer =
        propagator_kind == PropagatorKind::chebyshev ? chebyshev_degree : 1;
    const int conv_layers = static_cast<int>(hidden_dims.size()) + (output_propagates ? 1 : 0);
    return per_layer * conv_layers;
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"early_stop_patience", c.early_stop_patience},
            {"weight_decay", c.weight_decay},
            {"dropout", c.dropout},
            {"hidden_dims", c.hidden_dims},
            {"model", to_string(c.propagator_kind)},
            {"chebyshev_degree", c.chebyshev_degree},
            {"output_propagates", c.output_propagates},
            {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    try {
        if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
        if (j.contains("early_stop_patience"))
            c.early_stop_patience = j.at("early_stop_patience").get<int>();
        if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
        if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
        if (j.contains("hidden_dims"))
            c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
        if (j.contains("model"))
            c.propagator_kind = parse_propagator_kind(j.at("model").get<std::string>());
        if (j.contains("chebyshev_degree")) c.chebyshev_degree = j.at("chebyshev_degree").get<int>();
        if (j.contains("output_propagates"))
            c.output_propagates = j.at("output_propagates").get<bool>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

std::size_t GcnModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
        for (const auto& w : l.weights) n += w.values().size();
    return n;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

GcnModel init_model(const TrainConfig& config, std::size_t input_dim) {
    config.validate();
    if (input_dim < 1) throw ContractError("init_model: input_dim must be >= 1");
    GcnModel model;
    model.config = config;
    model.layer_dims.push_back(input_dim);
    for (auto h : config.hidden_dims) model.layer_dims.push_back(h);
    model.layer_dims.push_back(2);

    std::mt19937_64 rng(config.seed);
    const std::size_t n_layers = model.layer_dims.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        GcnLayer layer;
        layer.propagates = l + 1 < n_layers || config.output_propagates;
        const std::size_t fan_in = model.layer_dims[l];
        const std::size_t fan_out = model.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        const std::size_t count = layer.propagates ? basis_size(config) : 1;
        for (std::size_t k = 0; k < count; ++k) {
            Matrix w(fan_in, fan_out);
            for (double& v : w.values()) v = bound * (2.0 * uniform01(rng) - 1.0);
            layer.weights.push_back(std::move(w));
        }
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Propagator make_propagator(const LeagueGraph& graph, const TrainConfig& config) {
    if (config.propagator_kind == PropagatorKind::chebyshev)
        return chebyshev_basis(graph, config.chebyshev_degree);
    return normalized_adjacency(graph);
}

ForwardCache forward(const GcnModel& model, const Matrix& features, const Propagator& propagator,
                     bool training, std::mt19937_64* rng) {
    if (features.cols() != model.input_dim())
        throw ContractError("forward: feature dimension " + std::to_string(features.cols()) +
                            " does not match model input " + std::to_string(model.input_dim()));
    const double p = model.config.dropout;
    const bool drop = training && p > 0.0;
    if (drop && rng == nullptr) throw ContractError("forward: dropout requires a generator");

    ForwardCache cache;
    Matrix h = features;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        if (h.cols() != layer.weights.front().rows())
            throw ContractError("forward: layer " + std::to_string(l) + " expects input width " +
                                std::to_string(layer.weights.front().rows()));
        if (drop) {
            Matrix scale(h.rows(), h.cols());
            const double keep = 1.0 / (1.0 - p);
            for (double& s : scale.values()) s = uniform01(*rng) < p ? 0.0 : keep;
            hadamard_inplace(h, scale);
            cache.dropout_scales.push_back(std::move(scale));
        } else {
            cache.dropout_scales.emplace_back();
        }

        Matrix z;
        if (layer.propagates) {
            if (propagator.matrices.size() != layer.weights.size())
                throw ContractError("forward: layer " + std::to_string(l) + " has " +
                                    std::to_string(layer.weights.size()) +
                                    " weight matrices but the propagator has " +
                                    std::to_string(propagator.matrices.size()));
            for (std::size_t k = 0; k < layer.weights.size(); ++k) {
                const auto& pk = propagator.matrices[k];
                if (pk.rows() != h.rows())
                    throw ContractError("forward: propagator size does not match node count");
                Matrix term = kernels::spmm(pk, kernels::matmul(h, layer.weights[k]));
                if (k == 0) {
                    z = std::move(term);
                } else {
                    add_inplace(z, term);
                }
            }
        } else {
            z = kernels::matmul(h, layer.weights.front());
        }
        cache.inputs.push_back(std::move(h));

        if (l + 1 < model.layers.size()) {
            h = z;
            for (double& v : h.values()) v = v > 0.0 ? v : 0.0;
        } else {
            cache.logits = z;
        }
        cache.pre_activations.push_back(std::move(z));
    }
    return cache;
}

double masked_loss(const Matrix& logits, const std::vector<int>& labels,
                   const std::vector<bool>& mask, double weight_decay, const GcnModel& model) {
    if (logits.cols() != 2) throw ContractError("masked_loss: logits must have two columns");
    const std::size_t m = check_mask(labels, mask, logits.rows());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        const auto [l0, l1] = log_softmax2(logits(i, 0), logits(i, 1));
        sum -= labels[i] == 1 ? l1 : l0;
    }
    double decay = 0.0;
    if (weight_decay != 0.0 && !model.layers.empty())
        for (const auto& w : model.layers.front().weights)
            for (double v : w.values()) decay += v * v;
    return sum / static_cast<double>(m) + weight_decay * 0.5 * decay;
}

Gradients backward(const GcnModel& model, const ForwardCache& cache, const Propagator& propagator,
                   const std::vector<int>& labels, const std::vector<bool>& mask,
                   double weight_decay) {
    const std::size_t n_layers = model.layers.size();
    if (cache.inputs.size() != n_layers || cache.pre_activations.size() != n_layers ||
        cache.logits.cols() != 2)
        throw ContractError("backward: cache does not match model");
    for (std::size_t l = 0; l < n_layers; ++l)
        if (cache.inputs[l].cols() != model.layers[l].weights.front().rows() ||
            cache.pre_activations[l].cols() != model.layers[l].weights.front().cols())
            throw ContractError("backward: stale cache at layer " + std::to_string(l));

    const std::size_t rows = cache.logits.rows();
    const std::size_t m = check_mask(labels, mask, rows);

    Matrix dz(rows, 2);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!mask[i]) continue;
        const auto [l0, l1] = log_softmax2(cache.logits(i, 0), cache.logits(i, 1));
        dz(i, 0) = (std::exp(l0) - (labels[i] == 0 ? 1.0 : 0.0)) * inv_m;
        dz(i, 1) = (std::exp(l1) - (labels[i] == 1 ? 1.0 : 0.0)) * inv_m;
    }

    Gradients grads(n_layers);
    for (std::size_t li = n_layers; li-- > 0;) {
        const auto& layer = model.layers[li];
        const Matrix& input = cache.inputs[li];
        Matrix d_input;
        grads[li].resize(layer.weights.size());
        if (layer.propagates) {
            // Propagators are symmetric, so P^T dZ == P dZ.
            for (std::size_t k = 0; k < layer.weights.size(); ++k) {
                const Matrix back = kernels::spmm(propagator.matrices[k], dz);
                grads[li][k] = kernels::matmul_tn(input, back);
                if (li > 0) {
                    Matrix term = kernels::matmul_nt(back, layer.weights[k]);
                    if (k == 0) {
                        d_input = std::move(term);
                    } else {
                        add_inplace(d_input, term);
                    }
                }
            }
        } else {
            grads[li][0] = kernels::matmul_tn(input, dz);
            if (li > 0) d_input = kernels::matmul_nt(dz, layer.weights[0]);
        }
        if (li == 0) break;

        if (!cache.dropout_scales[li].empty()) hadamard_inplace(d_input, cache.dropout_scales[li]);
        const Matrix& pre = cache.pre_activations[li - 1];
        for (std::size_t i = 0; i < d_input.values().size(); ++i)
            if (!(pre.values()[i] > 0.0)) d_input.values()[i] = 0.0;
        dz = std::move(d_input);
    }

    if (weight_decay != 0.0)
        for (std::size_t k = 0; k < grads[0].size(); ++k) {
            auto& g = grads[0][k].values();
            const auto& w = model.layers[0].weights[k].values();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += weight_decay * w[i];
        }
    return grads;
}

GraphBatch make_batch(const LeagueGraph& graph, const TrainConfig& config) {
    if (graph.features.rows() != graph.node_count())
        throw ContractError("make_batch: graph has no attached features");
    return {graph.features, make_propagator(graph, config), graph.labels, graph.label_mask};
}

Evaluation evaluate(const GcnModel& model, const GraphBatch& batch) {
    const ForwardCache cache = forward(model, batch.features, batch.propagator, false);
    Evaluation e;
    e.labeled = check_mask(batch.labels, batch.mask, cache.logits.rows());
    e.loss = masked_loss(cache.logits, batch.labels, batch.mask, 0.0, model);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < cache.logits.rows(); ++i) {
        if (!batch.mask[i]) continue;
        const int predicted = cache.logits(i, 1) > cache.logits(i, 0) ? 1 : 0;
        if (predicted == batch.labels[i]) ++correct;
    }
    e.accuracy = static_cast<double>(correct) / static_cast<double>(e.labeled);
    return e;
}

void write_report_csv(std::ostream& out, const TrainReport& report) {
    out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e)
        out << e + 1 << ',' << csv::format_double(report.train_loss[e]) << ','
            << csv::format_double(report.train_accuracy[e]) << ','
            << csv::format_double(report.val_loss[e]) << ','
            << csv::format_double(report.val_accuracy[e]) << '\n';
}

TrainResult train(GcnModel model, const GraphBatch& train_batch, const GraphBatch& val_batch,
                  const TrainConfig& config) {
    config.validate();
    for (const auto* b : {&train_batch, &val_batch})
        for (const auto& p : b->propagator.matrices)
            if (!p.is_symmetric()) throw ContractError("train: propagator must be symmetric");
    check_mask(val_batch.labels, val_batch.mask, val_batch.features.rows());

    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;

    std::mt19937_64 dropout_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    Gradients first_moment, second_moment;
    for (const auto& layer : model.layers) {
        first_moment.emplace_back();
        second_moment.emplace_back();
        for (const auto& w : layer.weights) {
            first_moment.back().emplace_back(w.rows(), w.cols());
            second_moment.back().emplace_back(w.rows(), w.cols());
        }
    }

    TrainResult result{model, {}};
    auto& report = result.report;
    double best_acc = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const ForwardCache cache =
            forward(model, train_batch.features, train_batch.propagator, true, &dropout_rng);
        const double loss = masked_loss(cache.logits, train_batch.labels, train_batch.mask,
                                        config.weight_decay, model);
        if (!std::isfinite(loss))
            throw TrainingError("training diverged: loss is not finite at epoch " +
                                    std::to_string(epoch),
                                epoch);
        std::size_t correct = 0, labeled = 0;
        for (std::size_t i = 0; i < cache.logits.rows(); ++i) {
            if (!train_batch.mask[i]) continue;
            ++labeled;
            if ((cache.logits(i, 1) > cache.logits(i, 0) ? 1 : 0) == train_batch.labels[i]) ++correct;
        }

        const Gradients grads = backward(model, cache, train_batch.propagator, train_batch.labels,
                                         train_batch.mask, config.weight_decay);
        const double bc1 = 1.0 - std::pow(kBeta1, epoch);
        const double bc2 = 1.0 - std::pow(kBeta2, epoch);
        for (std::size_t l = 0; l < model.layers.size(); ++l)
            for (std::size_t k = 0; k < model.layers[l].weights.size(); ++k) {
                auto& w = model.layers[l].weights[k].values();
                auto& m1 = first_moment[l][k].values();
                auto& m2 = second_moment[l][k].values();
                const auto& g = grads[l][k].values();
                for (std::size_t i = 0; i < w.size(); ++i) {
                    m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * g[i];
                    m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * g[i] * g[i];
                    w[i] -= config.learning_rate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + kEps);
                }
            }

        const Evaluation val = evaluate(model, val_batch);
        report.train_loss.push_back(loss);
        report.train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(labeled));
        report.val_loss.push_back(val.loss);
        report.val_accuracy.push_back(val.accuracy);
        report.epochs_run = epoch;
        if (!std::isfinite(val.loss))
            throw TrainingError("training diverged: validation loss is not finite at epoch " +
                                    std::to_string(epoch),
                                epoch);

        if (val.accuracy > best_acc || (val.accuracy == best_acc && val.loss < best_loss)) {
            best_acc = val.accuracy;
            best_loss = val.loss;
            report.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }
    return result;
}

std::vector<double> predict(const GcnModel& model, const Matrix& features,
                            const Propagator& propagator) {
    const ForwardCache cache = forward(model, features, propagator, false);
    std::vector<double> p(cache.logits.rows());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto [l0, l1] = log_softmax2(cache.logits(i, 0), cache.logits(i, 1));
        (void)l0;
        p[i] = std::exp(l1);
    }
    return p;
}

nlohmann::json to_json(const GcnModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : model.layers) {
        nlohmann::json weights = nlohmann::json::array();
        for (const auto& w : l.weights)
            weights.push_back({{"rows", w.rows()}, {"cols", w.cols()}, {"values", w.values()}});
        layers.push_back({{"propagates", l.propagates}, {"weights", weights}});
    }
    return {{"schema_version", kModelSchemaVersion},
            {"config", to_json(model.config)},
            {"layer_dims", model.layer_dims},
            {"layers", layers}};
}

GcnModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kModelSchemaVersion)
            throw ConfigError("model: unsupported schema_version");
        GcnModel model;
        model.config = train_config_from_json(j.at("config"));
        model.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
        for (const auto& l : j.at("layers")) {
            GcnLayer layer;
            layer.propagates = l.at("propagates").get<bool>();
            for (const auto& w : l.at("weights"))
                layer.weights.emplace_back(w.at("rows").get<std::size_t>(),
                                           w.at("cols").get<std::size_t>(),
                                           w.at("values").get<std::vector<double>>());
            model.layers.push_back(std::move(layer));
        }
        if (model.layer_dims.size() != model.layers.size() + 1 || model.layer_dims.back() != 2)
            throw ConfigError("model: layer_dims do not match layers");
        for (std::size_t l = 0; l < model.layers.size(); ++l)
            for (const auto& w : model.layers[l].weights)
                if (w.rows() != model.layer_dims[l] || w.cols() != model.layer_dims[l + 1])
                    throw ConfigError("model: weight shape does not chain at layer " +
                                      std::to_string(l));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    } catch (const ContractError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

}  // namespace gcnwp
