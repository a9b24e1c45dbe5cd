#include "model_config.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cctype>

namespace mtra {

std::string_view variant_name(MrffVariant v) {
    switch (v) {
        case MrffVariant::Mrff: return "mrff";
        case MrffVariant::Mrff1: return "mrff1";
        case MrffVariant::Mrff2: return "mrff2";
        case MrffVariant::Baseline: return "baseline";
    }
    return "?";
}

MrffVariant parse_variant(std::string_view name) {
    std::string low(name);
    std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto v : {MrffVariant::Mrff, MrffVariant::Mrff1, MrffVariant::Mrff2, MrffVariant::Baseline}) {
        if (variant_name(v) == low) return v;
    }
    throw ValidationError("unknown MRFF variant '" + std::string(name) + "' (expected mrff, mrff1, mrff2, baseline)");
}

void ModelConfig::validate() const {
    if (class_count < 1) throw ValidationError("class_count must be >= 1");
    if (in_channels < 1) throw ValidationError("in_channels must be >= 1");
    if (input_size < 1) throw ValidationError("input_size must be >= 1");
    if (encoder_widths.empty()) throw ValidationError("encoder_widths must not be empty");
    for (std::size_t i = 0; i < encoder_widths.size(); ++i) {
        if (encoder_widths[i] < 1) throw ValidationError("encoder widths must be >= 1");
        if (i > 0 && encoder_widths[i] <= encoder_widths[i - 1]) {
            throw ValidationError("encoder widths must be strictly increasing");
        }
    }
    if (cbam_reduction < 1) throw ValidationError("cbam_reduction must be >= 1");
    if (cbam_spatial_kernel < 3 || cbam_spatial_kernel % 2 == 0) {
        throw ValidationError("cbam_spatial_kernel must be odd and >= 3");
    }
}

namespace {

std::int64_t conv(std::int64_t k, std::int64_t cin, std::int64_t cout) { return k * k * cin * cout + cout; }
std::int64_t conv_block(std::int64_t k, std::int64_t cin, std::int64_t cout) { return conv(k, cin, cout) + 2 * cout; }

std::int64_t encoder_block(MrffVariant v, std::int64_t cin, std::int64_t cout) {
    if (v == MrffVariant::Baseline) return conv_block(3, cin, cout) + conv_block(3, cout, cout);
    std::int64_t n = conv_block(3, cin, cout) + conv_block(5, cin, cout) + conv_block(7, cin, cout);
    n += conv_block(3, 3 * cout, cout);  // fusion of the concatenated branches
    n += conv_block(3, cin, cout);       // enrichment path E
    if (v == MrffVariant::Mrff) n += conv(1, cin, cout);
    if (v == MrffVariant::Mrff2) n += conv(1, cout, cout);
    return n;
}

std::int64_t cbam(std::int64_t c, std::int64_t reduction, std::int64_t kernel) {
    const std::int64_t hidden = std::max<std::int64_t>(1, c / reduction);
    return (c * hidden + hidden) + (hidden * c + c) + conv(kernel, 2, 1);
}

}  // namespace

std::vector<std::pair<std::string, std::int64_t>> parameter_breakdown(const ModelConfig& config) {
    config.validate();
    const auto& w = config.encoder_widths;
    std::vector<std::pair<std::string, std::int64_t>> out;
    std::int64_t cin = config.in_channels;
    for (int i = 0; i < config.depth(); ++i) {
        out.emplace_back("encoder" + std::to_string(i), encoder_block(config.variant, cin, w[i]));
        cin = w[i];
    }
    for (int i = config.depth() - 2; i >= 0; --i) {
        const std::int64_t c = w[i];
        out.emplace_back("decoder" + std::to_string(i) + ".up", 4 * w[i + 1] * c + c);
        out.emplace_back("decoder" + std::to_string(i) + ".cbam",
                         cbam(c, config.cbam_reduction, config.cbam_spatial_kernel));
        out.emplace_back("decoder" + std::to_string(i) + ".blocks", conv_block(3, 2 * c, c) + conv_block(3, c, c));
    }
    out.emplace_back("head", conv(1, w[0], config.class_count));
    return out;
}

std::int64_t count_parameters(const ModelConfig& config) {
    std::int64_t total = 0;
    for (const auto& [name, n] : parameter_breakdown(config)) total += n;
    return total;
}

}  // namespace mtra
