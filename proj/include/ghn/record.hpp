#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "experiments.hpp"

namespace ghn {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config and run records

/// Keys map to their canonical text so values round-trip exactly.
inline Json config_to_json(const TrainConfig& cfg) {
    Json j = Json::object();
    for (const auto& k : config_keys()) j[k.name] = k.get(cfg);
    return j;
}

inline TrainConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw DataError("config must be a JSON object");
    TrainConfig cfg;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) throw DataError("config value for '" + k + "' must be a string");
        set_key(cfg, k, v.get<std::string>());
    }
    return cfg;
}

namespace detail {
    /// NaN is not valid JSON; it is written as null.
    inline Json real(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
    inline double real(const Json& j) {
        return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
    }
}

inline Json to_json(const RunRecord& r) {
    Json curve = Json::array();
    for (const auto& m : r.curve)
        curve.push_back({{"epoch", m.epoch},
                         {"train_loss", detail::real(m.train_loss)},
                         {"train_acc", detail::real(m.train_acc)},
                         {"val_acc", detail::real(m.val_acc)}});
    Json layers = Json::array();
    for (const auto& p : r.layers)
        layers.push_back({{"beta", detail::real(p.beta)},
                          {"memory_norm_sq", detail::real(p.memory_norm_sq)},
                          {"product", detail::real(p.product)},
                          {"gate_mean", detail::real(p.gate_mean)}});
    return {{"config_hash", r.config_hash},
            {"seed", r.seed},
            {"config", config_to_json(r.config)},
            {"epochs_run", r.epochs_run},
            {"best_epoch", r.best_epoch},
            {"best_val_acc", detail::real(r.best_val_acc)},
            {"train_acc", detail::real(r.train_acc)},
            {"val_acc", detail::real(r.val_acc)},
            {"test_acc", detail::real(r.test_acc)},
            {"collapsed", r.collapsed},
            {"collapse_reason", r.collapse_reason},
            {"parameter_count", r.parameter_count},
            {"operating_points", layers},
            {"curve", curve}};
}

inline RunRecord run_record_from_json(const Json& j) {
    try {
        RunRecord r;
        r.config = config_from_json(j.at("config"));
        r.config_key = config_key(r.config);
        r.config_hash = j.at("config_hash").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.epochs_run = j.at("epochs_run").get<int>();
        r.best_epoch = j.at("best_epoch").get<int>();
        r.best_val_acc = detail::real(j.at("best_val_acc"));
        r.train_acc = detail::real(j.at("train_acc"));
        r.val_acc = detail::real(j.at("val_acc"));
        r.test_acc = detail::real(j.at("test_acc"));
        r.collapsed = j.at("collapsed").get<bool>();
        r.collapse_reason = j.at("collapse_reason").get<std::string>();
        r.parameter_count = j.at("parameter_count").get<std::size_t>();
        for (const auto& p : j.at("operating_points"))
            r.layers.push_back({detail::real(p.at("beta")), detail::real(p.at("memory_norm_sq")),
                                detail::real(p.at("product")), detail::real(p.at("gate_mean"))});
        for (const auto& m : j.at("curve"))
            r.curve.push_back({m.at("epoch").get<int>(), detail::real(m.at("train_loss")),
                               detail::real(m.at("train_acc")), detail::real(m.at("val_acc"))});
        return r;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed run record: ") + e.what());
    }
}

/// Appends one JSON line per record.
inline void append_records(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<RunRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<RunRecord> out;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            out.push_back(run_record_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline Json checkpoint_to_json(GhnModel& model) {
    Json params = Json::array();
    for (Parameter* p : model.parameters()) {
        Json data = Json::array();
        for (Index i = 0; i < p->value.size(); ++i) data.push_back(p->value.data()[i]);
        params.push_back({{"name", p->name},
                          {"rows", p->value.rows()},
                          {"cols", p->value.cols()},
                          {"data", data}});
    }
    return {{"config", config_to_json(model.config)},
            {"input_dim", model.encoder_weight.value.rows()},
            {"num_classes", model.classifier_weight.value.cols()},
            {"parameters", params}};
}

inline GhnModel checkpoint_from_json(const Json& j) {
    try {
        const TrainConfig cfg = config_from_json(j.at("config"));
        Rng rng(0);
        GhnModel model = GhnModel::create(cfg, j.at("input_dim").get<Index>(),
                                          j.at("num_classes").get<int>(), rng);
        auto params = model.parameters();
        const Json& saved = j.at("parameters");
        if (saved.size() != params.size())
            throw DataError("checkpoint has " + std::to_string(saved.size()) +
                            " parameters, model expects " + std::to_string(params.size()));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Json& s = saved[i];
            Parameter& p = *params[i];
            if (s.at("name").get<std::string>() != p.name || s.at("rows").get<Index>() != p.value.rows() ||
                s.at("cols").get<Index>() != p.value.cols())
                throw DataError("checkpoint parameter " + std::to_string(i) + " (" +
                                s.at("name").get<std::string>() + ") does not match " + p.name);
            const Json& data = s.at("data");
            if (static_cast<Index>(data.size()) != p.value.size())
                throw DataError("checkpoint parameter " + p.name + " has wrong size");
            for (Index k = 0; k < p.value.size(); ++k) p.value.data()[k] = data[k].get<double>();
        }
        return model;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(GhnModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << checkpoint_to_json(model).dump() << '\n';
}

inline GhnModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return checkpoint_from_json(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Manifests

/// What a command was asked to do. The hash covers everything except the
/// output directory and the timestamp, so a replay into a fresh directory
/// produces the same file names and contents.
struct RunManifest {
    std::string command;
    std::vector<std::string> arguments;
    std::string config_path;
    std::vector<std::string> data_paths;
    std::vector<std::uint64_t> seeds;
    std::string output_dir;
    std::string timestamp;

    Json identity() const {
        return {{"command", command},
                {"arguments", arguments},
                {"config_path", config_path},
                {"data_paths", data_paths},
                {"seeds", seeds}};
    }

    std::string hash() const { return hex64(fnv1a(identity().dump())); }

    Json to_json() const {
        Json j = identity();
        j["output_dir"] = output_dir;
        j["timestamp"] = timestamp;
        j["hash"] = hash();
        return j;
    }

    static RunManifest from_json(const Json& j) {
        try {
            RunManifest m;
            m.command = j.at("command").get<std::string>();
            m.arguments = j.at("arguments").get<std::vector<std::string>>();
            m.config_path = j.at("config_path").get<std::string>();
            m.data_paths = j.at("data_paths").get<std::vector<std::string>>();
            m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
            m.output_dir = j.value("output_dir", "");
            m.timestamp = j.value("timestamp", "");
            return m;
        } catch (const Json::exception& e) {
            throw DataError(std::string("malformed manifest: ") + e.what());
        }
    }
};

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return RunManifest::from_json(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Tables

/// Tab-separated table with a header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) {
        require_shape(row.size() == header.size(), "table row has " + std::to_string(row.size()) +
                                                       " cells, header has " +
                                                       std::to_string(header.size()));
        rows.push_back(std::move(row));
    }

    std::string to_tsv() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "\t" : "") + cells[i];
            out += '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }
};

/// Fixed six-decimal text, or "nan".
inline std::string cell(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

inline std::string cell(const std::optional<double>& v) { return v ? cell(*v) : "nan"; }

inline std::string cell(const std::optional<bool>& v) {
    return v ? (*v ? "yes" : "no") : "n/a";
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace ghn
