#include "depsev/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

namespace depsev {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kMagic[8] = {'D', 'S', 'E', 'V', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

json encoder_to_json(const EncoderConfig& c) {
    return json{{"name", c.name},           {"vocab_size", c.vocab_size},
                {"hidden_dim", c.hidden_dim}, {"num_layers", c.num_layers},
                {"num_heads", c.num_heads},   {"ffn_dim", c.ffn_dim},
                {"max_tokens", c.max_tokens}};
}

EncoderConfig encoder_from_json(const json& j) {
    EncoderConfig c;
    c.name = j.at("name").get<std::string>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.ffn_dim = j.at("ffn_dim").get<int>();
    c.max_tokens = j.at("max_tokens").get<int>();
    return c;
}

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_raw(std::istream& in, T& value, const std::string& what) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw InferenceError("checkpoint weights: truncated while reading " + what);
}

}  // namespace

std::uint64_t feature_schema_hash(FeaturePreset preset) {
    std::uint64_t h = fnv1a("feature-schema");
    for (const auto& name : feature_names(preset)) {
        h = fnv1a(name, h);
        h = fnv1a("\x1f", h);
    }
    return h;
}

void save_checkpoint(const Classifier& model, const std::string& dir,
                     const MetricsReport* metrics) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeError("cannot create checkpoint directory " + dir + ": " + ec.message());

    const ModelConfig& c = model.config();
    json schema_names = json::array();
    for (const auto& name : feature_names(c.features)) schema_names.push_back(name);
    json classes = json::array();
    for (const char* name : kLabelNames) classes.push_back(name);

    json doc{{"schema_version", 1},
             {"model",
              {{"encoder", encoder_to_json(c.encoder)},
               {"cls_layers", c.cls_layers},
               {"features", feature_preset_name(c.features)},
               {"head", head_kind_name(c.head)},
               {"head_hidden", c.head_hidden},
               {"dropout", c.dropout},
               {"freeze_encoder", c.freeze_encoder}}},
             {"feature_schema",
              {{"names", schema_names}, {"hash", hash_hex(feature_schema_hash(c.features))}}},
             {"classes", classes}};

    {
        std::ofstream out(fs::path(dir) / "model.json");
        if (!out) throw RuntimeError("cannot write checkpoint config in " + dir);
        out << doc.dump(2) << "\n";
    }

    std::ofstream bin(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw RuntimeError("cannot write checkpoint weights in " + dir);
    bin.write(kMagic, sizeof(kMagic));
    write_raw(bin, kFormatVersion);
    const auto& params = model.named_parameters();
    write_raw(bin, static_cast<std::uint64_t>(params.size()));
    for (const auto& [name, v] : params) {
        write_raw(bin, static_cast<std::uint32_t>(name.size()));
        bin.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_raw(bin, static_cast<std::uint64_t>(v->value.rows()));
        write_raw(bin, static_cast<std::uint64_t>(v->value.cols()));
        for (Eigen::Index r = 0; r < v->value.rows(); ++r) {
            for (Eigen::Index col = 0; col < v->value.cols(); ++col) {
                write_raw(bin, v->value(r, col));
            }
        }
    }
    if (!bin) throw RuntimeError("short write on checkpoint weights in " + dir);

    if (metrics != nullptr) {
        std::ofstream mout(fs::path(dir) / "metrics.json");
        if (!mout) throw RuntimeError("cannot write checkpoint metrics in " + dir);
        mout << render_report(*metrics, ReportFormat::json);
    }
}

Classifier load_checkpoint(const std::string& dir) {
    const fs::path config_path = fs::path(dir) / "model.json";
    std::ifstream in(config_path);
    if (!in) throw InferenceError("checkpoint " + dir + " has no model.json");

    ModelConfig config;
    try {
        json doc = json::parse(in);
        const json& m = doc.at("model");
        config.encoder = encoder_from_json(m.at("encoder"));
        config.cls_layers = m.at("cls_layers").get<int>();
        config.features = parse_feature_preset(m.at("features").get<std::string>());
        config.head = parse_head_kind(m.at("head").get<std::string>());
        config.head_hidden = m.at("head_hidden").get<int>();
        config.dropout = m.at("dropout").get<double>();
        config.freeze_encoder = m.at("freeze_encoder").get<bool>();

        const json& schema = doc.at("feature_schema");
        const auto expected_names = feature_names(config.features);
        const json& names = schema.at("names");
        if (names.size() != expected_names.size())
            throw InferenceError("checkpoint feature schema has " +
                                 std::to_string(names.size()) + " columns, this build expects " +
                                 std::to_string(expected_names.size()));
        for (std::size_t i = 0; i < expected_names.size(); ++i) {
            if (names.at(i).get<std::string>() != expected_names[i])
                throw InferenceError("checkpoint feature schema differs at column " +
                                     std::to_string(i) + "; refusing to load");
        }
        if (schema.at("hash").get<std::string>() != hash_hex(feature_schema_hash(config.features)))
            throw InferenceError("checkpoint feature schema hash mismatch; refusing to load");
    } catch (const json::exception& e) {
        throw InferenceError("checkpoint " + dir + ": malformed model.json: " + e.what());
    }

    Classifier model(config, 0);

    std::ifstream bin(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw InferenceError("checkpoint " + dir + " has no weights.bin");
    char magic[sizeof(kMagic)];
    bin.read(magic, sizeof(magic));
    if (!bin || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw InferenceError("checkpoint weights: bad magic");
    std::uint32_t version = 0;
    read_raw(bin, version, "format version");
    if (version != kFormatVersion)
        throw InferenceError("checkpoint weights: unsupported format version " +
                             std::to_string(version));

    std::uint64_t count = 0;
    read_raw(bin, count, "tensor count");
    std::map<std::string, Eigen::MatrixXd> tensors;
    for (std::uint64_t t = 0; t < count; ++t) {
        std::uint32_t name_len = 0;
        read_raw(bin, name_len, "tensor name length");
        std::string name(name_len, '\0');
        bin.read(name.data(), name_len);
        if (!bin) throw InferenceError("checkpoint weights: truncated tensor name");
        std::uint64_t rows = 0, cols = 0;
        read_raw(bin, rows, "tensor rows");
        read_raw(bin, cols, "tensor cols");
        Eigen::MatrixXd value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::uint64_t r = 0; r < rows; ++r) {
            for (std::uint64_t col = 0; col < cols; ++col) {
                double x = 0.0;
                read_raw(bin, x, "tensor " + name);
                value(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = x;
            }
        }
        if (!tensors.emplace(std::move(name), std::move(value)).second)
            throw InferenceError("checkpoint weights: duplicate tensor name");
    }

    model.load_weights(tensors);
    return model;
}

}  // namespace depsev
