#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtra {

/// Encoder block flavour.
///   Mrff     - multi-resolution fusion with the GAP gate in parallel (Z = B*D(A) + E)
///   Mrff1    - no GAP gate (Z = B + E)
///   Mrff2    - GAP gate computed in series from B (Z = B*D(B) + E)
///   Baseline - plain double conv block (CBAM skips and hybrid pooling kept)
enum class MrffVariant { Mrff, Mrff1, Mrff2, Baseline };

std::string_view variant_name(MrffVariant v);
MrffVariant parse_variant(std::string_view name);

struct ModelConfig {
    int class_count = 5;
    int in_channels = 1;
    int input_size = 150;
    std::vector<int> encoder_widths{64, 128, 256, 512, 1024};
    MrffVariant variant = MrffVariant::Mrff;
    int cbam_reduction = 16;
    int cbam_spatial_kernel = 7;
    std::uint64_t seed = 0;

    int depth() const { return static_cast<int>(encoder_widths.size()); }
    /// Throws ValidationError.
    void validate() const;
};

/// Trainable scalar count per named layer, in construction order.
std::vector<std::pair<std::string, std::int64_t>> parameter_breakdown(const ModelConfig& config);

/// Exact number of trainable scalars (normalization running statistics are
/// buffers, not parameters).
std::int64_t count_parameters(const ModelConfig& config);

}  // namespace mtra
