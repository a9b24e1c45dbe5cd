#include "run_config.hpp"

#include "errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mtra {

std::string_view mode_name(Mode m) {
    switch (m) {
        case Mode::Multiclass: return "multiclass";
        case Mode::BinaryFC: return "binary-fc";
        case Mode::BinaryTC: return "binary-tc";
    }
    return "?";
}

Mode parse_mode(std::string_view name) {
    for (Mode m : {Mode::Multiclass, Mode::BinaryFC, Mode::BinaryTC}) {
        if (mode_name(m) == name) return m;
    }
    throw ValidationError("unknown mode '" + std::string(name) + "' (expected multiclass, binary-fc, binary-tc)");
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    const std::string v = trim(text);
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ValidationError("invalid value '" + std::string(text) + "' for key '" + std::string(key) + "'");
    }
    return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
    std::vector<T> out;
    std::string item;
    std::stringstream ss{std::string(text)};
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
    if (out.empty()) throw ValidationError("empty list for key '" + std::string(key) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
    const std::string v = trim(text);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ValidationError("invalid boolean '" + v + "' for key '" + std::string(key) + "'");
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += fmt(v[i]);
        else out += std::to_string(v[i]);
    }
    return out;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError("cannot open config file '" + p.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig resolve(std::string_view base_name, const KeyValues& file_keys, const KeyValues& overrides) {
    auto find_last = [](const KeyValues& kv, std::string_view key) -> const std::string* {
        const std::string* out = nullptr;
        for (const auto& [k, v] : kv) {
            if (k == key) out = &v;
        }
        return out;
    };
    const std::string* mode = find_last(overrides, "mode");
    if (!mode) mode = find_last(file_keys, "mode");
    RunConfig base = preset(base_name, mode ? parse_mode(trim(*mode)) : Mode::Multiclass);
    for (const KeyValues* kv : {&file_keys, &overrides}) {
        for (const auto& [k, v] : *kv) {
            if (k == "mode" || k == "base") continue;
            base.set(k, v);
        }
    }
    base.validate();
    return base;
}

}  // namespace

TargetEncoding RunConfig::encoding() const {
    switch (mode) {
        case Mode::Multiclass: return {};
        case Mode::BinaryFC: return {Tissue::FC};
        case Mode::BinaryTC: return {Tissue::TC};
    }
    return {};
}

void RunConfig::set_mode(Mode m) {
    mode = m;
    if (m == Mode::Multiclass) {
        model.class_count = kMultiClassCount;
        weights.alpha = loss::LossWeights::multiclass().alpha;
        roi = roi::ThresholdConfig::multiclass_defaults();
        batch_size = 150;
    } else {
        model.class_count = 1;
        weights.alpha = loss::LossWeights::binary().alpha;
        roi = m == Mode::BinaryFC ? roi::ThresholdConfig::binary_fc_defaults()
                                  : roi::ThresholdConfig::binary_tc_defaults();
        batch_size = 64;
    }
}

void RunConfig::set(std::string_view key_in, std::string_view value_in) {
    const std::string key = trim(key_in);
    const std::string value = trim(value_in);
    if (key == "mode") set_mode(parse_mode(value));
    else if (key == "epochs") epochs = parse_number<int>(key, value);
    else if (key == "batch_size") batch_size = parse_number<int>(key, value);
    else if (key == "learning_rate") learning_rate = parse_number<double>(key, value);
    else if (key == "seed") model.seed = seed = parse_number<std::uint64_t>(key, value);
    else if (key == "alpha") weights.alpha = parse_list<double>(key, value);
    else if (key == "lambda") weights.lambda = parse_list<double>(key, value);
    else if (key == "gamma") weights.gamma = parse_number<double>(key, value);
    else if (key == "eta") weights.eta = parse_number<double>(key, value);
    else if (key.starts_with("roi.")) {
        const Tissue t = parse_tissue(key.substr(4));
        roi.set(t, value == "none" ? std::nullopt : std::optional<std::int64_t>(parse_number<std::int64_t>(key, value)));
    } else if (key == "widths") model.encoder_widths = parse_list<int>(key, value);
    else if (key == "input_size") model.input_size = parse_number<int>(key, value);
    else if (key == "variant") model.variant = parse_variant(value);
    else if (key == "cbam_reduction") model.cbam_reduction = parse_number<int>(key, value);
    else if (key == "cbam_kernel") model.cbam_spatial_kernel = parse_number<int>(key, value);
    else if (key == "split.train") split_train = parse_number<int>(key, value);
    else if (key == "split.val") split_val = parse_number<int>(key, value);
    else if (key == "split.test") split_test = parse_number<int>(key, value);
    else if (key == "edge_strip") edge_strip = parse_number<int>(key, value);
    else if (key == "phantom.slices") phantom_slices = parse_number<int>(key, value);
    else if (key == "phantom.size") phantom_size = parse_number<int>(key, value);
    else if (key == "phantom.spacing") phantom_spacing_mm = parse_number<double>(key, value);
    else if (key == "eval_batch") eval_batch = parse_number<int>(key, value);
    else if (key == "deterministic") deterministic = parse_bool(key, value);
    else if (key == "verbose") verbose = parse_bool(key, value);
    else throw ValidationError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (split_train < 0 || split_val < 0 || split_test < 0) throw ValidationError("split sizes must be >= 0");
    if (edge_strip < 0) throw ValidationError("edge_strip must be >= 0");
    if (phantom_slices < 1 || phantom_size < 1) throw ValidationError("phantom sizes must be >= 1");
    if (!(phantom_spacing_mm > 0.0)) throw ValidationError("phantom.spacing must be > 0");
    if (eval_batch < 1) throw ValidationError("eval_batch must be >= 1");
    model.validate();
    weights.validate(model.class_count, loss::ShapeNetImpl::kTaps);
    roi.validate();
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "mode=" << mode_name(mode) << "\n"
        << "epochs=" << epochs << "\n"
        << "batch_size=" << batch_size << "\n"
        << "learning_rate=" << fmt(learning_rate) << "\n"
        << "seed=" << seed << "\n"
        << "alpha=" << fmt_list(weights.alpha) << "\n"
        << "lambda=" << fmt_list(weights.lambda) << "\n"
        << "gamma=" << fmt(weights.gamma) << "\n"
        << "eta=" << fmt(weights.eta) << "\n";
    for (Tissue t : kTissues) {
        const auto v = roi.of(t);
        std::string name(tissue_name(t));
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        out << "roi." << name << "=" << (v ? std::to_string(*v) : std::string("none")) << "\n";
    }
    out << "widths=" << fmt_list(model.encoder_widths) << "\n"
        << "input_size=" << model.input_size << "\n"
        << "variant=" << variant_name(model.variant) << "\n"
        << "cbam_reduction=" << model.cbam_reduction << "\n"
        << "cbam_kernel=" << model.cbam_spatial_kernel << "\n"
        << "split.train=" << split_train << "\n"
        << "split.val=" << split_val << "\n"
        << "split.test=" << split_test << "\n"
        << "edge_strip=" << edge_strip << "\n"
        << "phantom.slices=" << phantom_slices << "\n"
        << "phantom.size=" << phantom_size << "\n"
        << "phantom.spacing=" << fmt(phantom_spacing_mm) << "\n"
        << "eval_batch=" << eval_batch << "\n"
        << "deterministic=" << (deterministic ? 1 : 0) << "\n"
        << "verbose=" << (verbose ? 1 : 0) << "\n";
    return out.str();
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::stringstream ss{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ValidationError("config line " + std::to_string(lineno) + " is not key=value: '" + t + "'");
        }
        out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return out;
}

bool is_preset(std::string_view name) { return name == "default" || name == "tiny"; }

RunConfig preset(std::string_view name, Mode mode) {
    RunConfig cfg;
    cfg.set_mode(mode);
    if (name == "default") return cfg;
    if (name == "tiny") {
        cfg.epochs = 20;
        cfg.batch_size = 2;
        cfg.model.encoder_widths = {8, 16, 32, 64, 128};
        cfg.model.input_size = 64;
        cfg.model.cbam_reduction = 4;
        cfg.split_train = 2;
        cfg.split_val = 1;
        cfg.split_test = 3;
        cfg.edge_strip = 2;
        cfg.phantom_slices = 24;
        cfg.phantom_size = 64;
        cfg.phantom_spacing_mm = 0.36 * 384.0 / 64.0;
        // Pixel-count thresholds follow the area ratio to a 150x150 input.
        const double area = (64.0 * 64.0) / (150.0 * 150.0);
        for (Tissue t : kTissues) {
            if (const auto v = cfg.roi.of(t)) cfg.roi.set(t, std::llround(static_cast<double>(*v) * area));
        }
        cfg.eval_batch = 8;
        return cfg;
    }
    throw ValidationError("unknown preset '" + std::string(name) + "' (expected default or tiny)");
}

RunConfig resolve_config(std::string_view source, const KeyValues& overrides) {
    if (is_preset(source)) return resolve(source, {}, overrides);
    const KeyValues file_keys = parse_key_values(read_file(std::filesystem::path(source)));
    std::string base = "default";
    for (const auto& [k, v] : file_keys) {
        if (k == "base") base = v;
    }
    return resolve(base, file_keys, overrides);
}

RunConfig config_from_text(std::string_view text) {
    const KeyValues kv = parse_key_values(text);
    std::string base = "default";
    for (const auto& [k, v] : kv) {
        if (k == "base") base = v;
    }
    return resolve(base, kv, {});
}

}  // namespace mtra
