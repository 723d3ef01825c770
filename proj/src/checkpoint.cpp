#include "medrec/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "medrec/errors.hpp"

namespace medrec {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

using nlohmann::json;

json model_config_to_json(const ModelConfig& c) {
    const auto& a = c.attention;
    return json{{"dim", c.dim},
                {"gru_layers", c.gru_layers},
                {"variant", variant_name(c.variant)},
                {"attention",
                 {{"layers", a.layers},
                  {"tau", a.tau},
                  {"beta", a.beta},
                  {"eta", a.eta},
                  {"gamma", a.gamma},
                  {"log_kappa_init", a.log_kappa_init},
                  {"leaky_slope", a.leaky_slope}}}};
}

ModelConfig model_config_from_json(const json& j) {
    try {
        ModelConfig c;
        c.dim = j.at("dim").get<Eigen::Index>();
        c.gru_layers = j.at("gru_layers").get<int>();
        c.variant = parse_variant(j.at("variant").get<std::string>());
        const auto& a = j.at("attention");
        c.attention.layers = a.at("layers").get<int>();
        c.attention.tau = a.at("tau").get<double>();
        c.attention.beta = a.at("beta").get<double>();
        c.attention.eta = a.at("eta").get<double>();
        c.attention.gamma = a.at("gamma").get<double>();
        c.attention.log_kappa_init = a.at("log_kappa_init").get<double>();
        c.attention.leaky_slope = a.at("leaky_slope").get<double>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model configuration: ") + e.what());
    }
}

std::string encode_checkpoint(const MedRecModel& model, const json& meta) {
    const ParameterStore& store = model.params();
    json params = json::array();
    std::size_t offset = 0;
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& v = store.value(i);
        params.push_back({{"name", store.name(i)}, {"shape", {v.rows(), v.cols()}}, {"offset", offset}});
        offset += static_cast<std::size_t>(v.size());
    }
    const json manifest{{"model", model_config_to_json(model.config())}, {"meta", meta}, {"params", params}};
    const std::string text = manifest.dump();
    std::string out;
    const std::uint64_t len = text.size();
    out.append(reinterpret_cast<const char*>(&len), sizeof len);
    out += text;
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& v = store.value(i);
        for (Eigen::Index r = 0; r < v.rows(); ++r)
            for (Eigen::Index c = 0; c < v.cols(); ++c) {
                const double x = v(r, c);
                out.append(reinterpret_cast<const char*>(&x), sizeof x);
            }
    }
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source) {
    auto fail = [&](const std::string& field, const std::string& msg) { return ParseError(source, 0, field, msg); };
    if (bytes.size() < 8) throw fail("header", "truncated checkpoint header");
    std::uint64_t len = 0;
    std::memcpy(&len, bytes.data(), sizeof len);
    if (len > bytes.size() - 8) throw fail("header", "manifest length exceeds file size");
    json manifest;
    try {
        manifest = json::parse(bytes.substr(8, len));
    } catch (const json::exception& e) {
        throw fail("manifest", e.what());
    }
    const std::size_t data_begin = 8 + len;
    const std::size_t available = (bytes.size() - data_begin) / sizeof(double);
    Checkpoint cp;
    try {
        cp.meta = manifest.at("meta");
        cp.meta["model"] = manifest.at("model");
        for (const auto& p : manifest.at("params")) {
            const auto name = p.at("name").get<std::string>();
            const auto rows = p.at("shape").at(0).get<Eigen::Index>();
            const auto cols = p.at("shape").at(1).get<Eigen::Index>();
            const auto offset = p.at("offset").get<std::size_t>();
            if (rows < 0 || cols < 0 || offset + static_cast<std::size_t>(rows * cols) > available) {
                throw fail("params." + name, "parameter extends past the end of the data");
            }
            Eigen::MatrixXd m(rows, cols);
            const char* at = bytes.data() + data_begin + offset * sizeof(double);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c) {
                    std::memcpy(&m(r, c), at, sizeof(double));
                    at += sizeof(double);
                }
            cp.params.emplace_back(name, std::move(m));
        }
    } catch (const json::exception& e) {
        throw fail("manifest", e.what());
    }
    return cp;
}

void save_checkpoint(const MedRecModel& model, const std::string& path, const json& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
    const std::string bytes = encode_checkpoint(model, meta);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read checkpoint '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str(), path);
}

void restore_parameters(MedRecModel& model, const Checkpoint& cp) {
    ParameterStore& store = model.params();
    if (cp.params.size() != store.size()) throw StructuralError("checkpoint parameter count does not match the model");
    for (const auto& [name, value] : cp.params) {
        if (!store.contains(name)) throw StructuralError("checkpoint parameter '" + name + "' is not part of the model");
        auto& dst = store.value(name);
        if (dst.rows() != value.rows() || dst.cols() != value.cols()) {
            throw StructuralError("checkpoint parameter '" + name + "' has the wrong shape");
        }
        dst = value;
    }
}

}  // namespace medrec
