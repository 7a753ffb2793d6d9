#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "optim.hpp"
#include "theory.hpp"

namespace ghn {

struct GhnLayer {
    /// Absent for the NoMem variant.
    std::optional<MemoryBank> bank;
    std::optional<Gate> gate;
    Parameter norm_gain;
    Parameter norm_bias;
};

/// encoder (linear + ReLU + dropout) → stacked layers → linear classifier.
/// Each layer: X_out = LayerNorm(iterate_T(X_in) + skip·X_in), dropout in training.
struct GhnModel {
    TrainConfig config;
    Parameter encoder_weight;  // d₀×d
    Parameter encoder_bias;    // 1×d
    std::vector<GhnLayer> layers;
    Parameter classifier_weight;  // d×C
    Parameter classifier_bias;    // 1×C

    static GhnModel create(const TrainConfig& cfg, Index input_dim, int num_classes, Rng& rng) {
        cfg.validate();
        if (num_classes < 1) throw DataError("graph has no labeled classes");
        const Index d = cfg.hidden_dim;
        auto linear = [&](const std::string& name, Index in, Index out, Parameter& w, Parameter& b) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            w = Parameter(name + "_weight", random_uniform(in, out, rng, -bound, bound));
            b = Parameter(name + "_bias", random_uniform(1, out, rng, -bound, bound));
        };
        GhnModel m;
        m.config = cfg;
        linear("encoder", input_dim, d, m.encoder_weight, m.encoder_bias);
        for (int l = 0; l < cfg.num_layers; ++l) {
            GhnLayer layer;
            if (cfg.variant != Variant::nomem) {
                const RetrievalKind kind =
                    cfg.variant == Variant::lsr ? RetrievalKind::lsr : RetrievalKind::lse;
                const int groups = cfg.variant == Variant::hier ? cfg.groups : 1;
                layer.bank = MemoryBank::create(cfg.num_patterns, d, cfg.beta_init, rng, kind,
                                                groups, cfg.heads);
                if (cfg.pattern_norm_sq > 0.0) {
                    const double s = spectral_norm(layer.bank->patterns.value);
                    layer.bank->patterns.value *= std::sqrt(cfg.pattern_norm_sq) / s;
                }
                layer.bank->log_beta.trainable = !cfg.freeze_beta;
                layer.bank->patterns.trainable = !cfg.freeze_patterns;
                layer.gate = Gate::create(d, cfg.gate_bias, rng);
            }
            layer.norm_gain = Parameter("norm_gain", Matrix::Ones(1, d), false);
            layer.norm_bias = Parameter("norm_bias", Matrix::Zero(1, d), false);
            m.layers.push_back(std::move(layer));
        }
        linear("classifier", d, num_classes, m.classifier_weight, m.classifier_bias);
        return m;
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out{&encoder_weight, &encoder_bias};
        for (auto& l : layers) {
            if (l.bank) {
                out.push_back(&l.bank->patterns);
                out.push_back(&l.bank->log_beta);
            }
            if (l.gate) {
                out.push_back(&l.gate->weight);
                out.push_back(&l.gate->bias);
            }
            out.push_back(&l.norm_gain);
            out.push_back(&l.norm_bias);
        }
        out.push_back(&classifier_weight);
        out.push_back(&classifier_bias);
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (Parameter* p : parameters()) n += static_cast<std::size_t>(p->value.size());
        return n;
    }

    std::vector<Matrix> snapshot() {
        std::vector<Matrix> out;
        for (Parameter* p : parameters()) out.push_back(p->value);
        return out;
    }

    void restore(const std::vector<Matrix>& values) {
        auto params = parameters();
        require_shape(params.size() == values.size(), "restore: parameter count");
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
    }
};

struct ForwardDiagnostics {
    /// [layer][iteration] mean gate value.
    std::vector<std::vector<double>> gate_means;
    /// [layer][iteration] ‖X_{t+1} - X_t‖_F.
    std::vector<std::vector<double>> step_norms;

    /// Mean over layers and iterations.
    double mean_gate() const {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& l : gate_means)
            for (double g : l) {
                s += g;
                ++n;
            }
        return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }
};

struct ForwardOutput {
    Var logits;
    ForwardDiagnostics diagnostics;
};

/// Builds the forward graph on `tape`. With `differentiable` off, parameters
/// enter as constants. `rng` drives dropout and is required when training.
inline ForwardOutput forward(Tape& tape, GhnModel& model, const Matrix& features,
                             const CsrMatrix& lap, bool training, Rng* rng,
                             bool differentiable = true) {
    require_shape(features.cols() == model.encoder_weight.value.rows(),
                  "forward: features have " + std::to_string(features.cols()) +
                      " columns, encoder expects " +
                      std::to_string(model.encoder_weight.value.rows()));
    if (training && rng == nullptr) throw Error("training forward needs a dropout stream");
    auto param = [&](Parameter& p) { return differentiable ? tape.parameter(p) : tape.constant(p.value); };
    auto check = [](const Var& v, const std::string& where) {
        if (!v.value().allFinite()) throw NumericError("non-finite activations in " + where);
    };
    const TrainConfig& cfg = model.config;
    const double rate = training ? cfg.dropout : 0.0;
    const DynamicsConfig dyn = cfg.dynamics();

    ForwardOutput out;
    Var h = ad::relu(ad::add_row(ad::matmul(tape.constant(features), param(model.encoder_weight)),
                                 param(model.encoder_bias)));
    check(h, "encoder");
    if (rate > 0.0) h = ad::dropout_mask(h, rate, *rng);

    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        GhnLayer& layer = model.layers[l];
        std::optional<BoundBank> bank;
        std::optional<BoundGate> gate;
        if (layer.bank) {
            Var log_beta = param(layer.bank->log_beta);
            bank = BoundBank{param(layer.bank->patterns), ad::exp(log_beta), layer.bank->groups,
                             layer.bank->heads, layer.bank->kind};
        }
        if (layer.gate) gate = BoundGate{param(layer.gate->weight), param(layer.gate->bias)};
        IterateOutput it;
        try {
            it = iterate(h, bank ? &*bank : nullptr, gate ? &*gate : nullptr, dyn, lap);
        } catch (const NumericError& e) {
            throw NumericError("layer " + std::to_string(l) + ": " + e.what());
        }
        out.diagnostics.gate_means.push_back(it.diagnostics.gate_means);
        out.diagnostics.step_norms.push_back(it.diagnostics.step_norms);
        Var skip = ad::add(it.state, ad::scale(h, cfg.skip_weight));
        h = ad::layer_norm(skip, param(layer.norm_gain), param(layer.norm_bias));
        check(h, "layer " + std::to_string(l));
        if (rate > 0.0) h = ad::dropout_mask(h, rate, *rng);
    }
    out.logits = ad::add_row(ad::matmul(h, param(model.classifier_weight)),
                             param(model.classifier_bias));
    check(out.logits, "classifier");
    return out;
}

/// Fraction of `rows` whose arg-max logit equals the label. Rows with a
/// non-finite logit count as wrong.
inline double accuracy(const Matrix& logits, const std::vector<int>& labels,
                       const std::vector<Index>& rows) {
    if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t hit = 0;
    for (Index r : rows) {
        if (!logits.row(r).allFinite()) continue;
        Index best = 0;
        logits.row(r).maxCoeff(&best);
        if (best == labels[r]) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(rows.size());
}

struct Evaluation {
    Matrix logits;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    ForwardDiagnostics diagnostics;
};

inline Evaluation evaluate(GhnModel& model, const Graph& g, const CsrMatrix& lap) {
    Tape tape;
    ForwardOutput f = forward(tape, model, g.features, lap, false, nullptr, false);
    Evaluation e;
    e.logits = f.logits.value();
    e.train_acc = accuracy(e.logits, g.labels, g.nodes_in(Split::train));
    e.val_acc = accuracy(e.logits, g.labels, g.nodes_in(Split::val));
    e.test_acc = accuracy(e.logits, g.labels, g.nodes_in(Split::test));
    e.diagnostics = std::move(f.diagnostics);
    return e;
}

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct LayerOperatingPoint {
    double beta = 0.0;
    double memory_norm_sq = 0.0;
    double product = 0.0;
    double gate_mean = 0.0;
};

/// Outcome of one (config, seed) run.
struct RunRecord {
    TrainConfig config;
    std::string config_key;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<EpochMetrics> curve;
    int epochs_run = 0;
    int best_epoch = 0;
    double best_val_acc = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    bool collapsed = false;
    std::string collapse_reason;
    std::size_t parameter_count = 0;
    std::vector<LayerOperatingPoint> layers;
};

/// β and ‖M‖²_σ for every memory layer, plus the mean gate of one evaluation.
inline std::vector<LayerOperatingPoint> operating_points(GhnModel& model,
                                                         const ForwardDiagnostics* diag = nullptr) {
    std::vector<LayerOperatingPoint> out;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const GhnLayer& layer = model.layers[l];
        if (!layer.bank) continue;
        LayerOperatingPoint p;
        p.beta = layer.bank->beta();
        const double s = spectral_norm(layer.bank->patterns.value);
        p.memory_norm_sq = s * s;
        p.product = p.beta * p.memory_norm_sq;
        p.gate_mean = std::numeric_limits<double>::quiet_NaN();
        if (diag && l < diag->gate_means.size() && !diag->gate_means[l].empty()) {
            double sum = 0.0;
            for (double v : diag->gate_means[l]) sum += v;
            p.gate_mean = sum / static_cast<double>(diag->gate_means[l].size());
        }
        out.push_back(p);
    }
    return out;
}

/// Full-batch Adam on the training cross-entropy with early stopping on
/// validation accuracy. The best-validation parameters are restored before the
/// final evaluation. A non-finite loss or activation ends training and marks
/// the run collapsed; the record is still complete.
inline RunRecord train(GhnModel& model, const Graph& g, const CsrMatrix& lap,
                       const TrainConfig& cfg) {
    cfg.validate();
    const auto train_rows = g.nodes_in(Split::train);
    if (train_rows.empty()) throw DataError("no training nodes");

    RunRecord rec;
    rec.config = cfg;
    rec.config_key = config_key(cfg);
    rec.config_hash = config_hash(cfg);
    rec.seed = cfg.seed;
    rec.parameter_count = model.parameter_count();

    // Dropout gets its own stream so initialization and dropout never interleave.
    Rng dropout_rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    Adam opt(model.parameters(), cfg.learning_rate, cfg.weight_decay);
    std::vector<Matrix> best = model.snapshot();
    double best_val = -1.0;
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochMetrics m;
        m.epoch = epoch;
        try {
            Tape tape;
            opt.zero_grad();
            ForwardOutput f = forward(tape, model, g.features, lap, true, &dropout_rng);
            Var loss = ad::cross_entropy_with_logits(f.logits, g.labels, train_rows);
            m.train_loss = loss.value()(0, 0);
            if (!std::isfinite(m.train_loss)) throw NumericError("non-finite loss");
            tape.backward(loss);
            opt.step();
            const Evaluation e = evaluate(model, g, lap);
            m.train_acc = e.train_acc;
            m.val_acc = e.val_acc;
        } catch (const NumericError& err) {
            rec.collapsed = true;
            rec.collapse_reason = "epoch " + std::to_string(epoch) + ": " + err.what();
            rec.epochs_run = epoch;
            break;
        }
        rec.curve.push_back(m);
        rec.epochs_run = epoch;
        if (m.val_acc > best_val) {
            best_val = m.val_acc;
            best = model.snapshot();
            rec.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    model.restore(best);
    try {
        const Evaluation e = evaluate(model, g, lap);
        rec.train_acc = e.train_acc;
        rec.val_acc = e.val_acc;
        rec.test_acc = e.test_acc;
        rec.best_val_acc = best_val < 0.0 ? e.val_acc : best_val;
        rec.layers = operating_points(model, &e.diagnostics);
    } catch (const NumericError& err) {
        rec.collapsed = true;
        if (rec.collapse_reason.empty()) rec.collapse_reason = err.what();
    }
    return rec;
}

/// Initializes a model from cfg.seed and trains it.
inline RunRecord train_run(const Graph& g, const CsrMatrix& lap, const TrainConfig& cfg,
                           GhnModel* trained = nullptr) {
    Rng rng(cfg.seed);
    GhnModel model = GhnModel::create(cfg, g.features.cols(), g.num_classes(), rng);
    RunRecord rec = train(model, g, lap, cfg);
    if (trained) *trained = std::move(model);
    return rec;
}

} // namespace ghn
