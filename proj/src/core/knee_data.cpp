#include "knee_data.hpp"

#include "png_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace mtra {

namespace {

template <typename T>
std::vector<float> minmax_impl(std::span<const T> raw) {
    std::vector<float> out(raw.size(), 0.0f);
    if (raw.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = static_cast<double>(*lo_it);
    const double hi = static_cast<double>(*hi_it);
    if (!(hi > lo)) return out;
    const double scale = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = static_cast<float>((static_cast<double>(raw[i]) - lo) * scale);
    }
    return out;
}

std::map<std::string, std::string> read_sidecar(const fs::path& file) {
    std::map<std::string, std::string> kv;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

struct ScannedDir {
    std::string subject;
    int max_index = -1;
};

// Finds the subject and highest slice index among the image files of `dir`.
ScannedDir scan_slices(const fs::path& dir) {
    static const std::regex image_re(R"(^(.+)_(\d{3,})\.png$)");
    ScannedDir s;
    if (!fs::is_directory(dir)) return s;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, image_re)) continue;
        const std::string subject = m[1].str();
        if (!s.subject.empty() && subject != s.subject) {
            throw ValidationError("directory '" + dir.string() + "' mixes subjects " + s.subject + " and " + subject);
        }
        s.subject = subject;
        s.max_index = std::max(s.max_index, std::stoi(m[2].str()));
    }
    return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Portable across standard libraries, unlike std::normal_distribution.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace

std::string slice_file(const SliceId& id) { return id.str() + ".png"; }
std::string mask_file(const SliceId& id) { return id.str() + "_mask.png"; }

std::vector<float> normalize_minmax(std::span<const std::uint16_t> raw) { return minmax_impl(raw); }
std::vector<float> normalize_minmax(std::span<const float> raw) { return minmax_impl(raw); }

ImageSlice load_image(const fs::path& path, Spacing spacing) {
    const png::GrayImage raw = png::read_gray(path);
    ImageSlice img(raw.height, raw.width, spacing);
    img.pixels = normalize_minmax(raw.values);
    return img;
}

LabelMask load_mask(const fs::path& path) {
    const png::GrayImage raw = png::read_gray(path);
    LabelMask mask(raw.height, raw.width, kMultiClassCount);
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        const std::uint16_t v = raw.values[i];
        if (v >= kMultiClassCount) {
            throw ValidationError("'" + path.filename().string() + "': label " + std::to_string(v) + " outside {0.." +
                                  std::to_string(kMultiClassCount - 1) + "}");
        }
        mask.labels[i] = static_cast<std::uint8_t>(v);
    }
    return mask;
}

Volume load_volume(const fs::path& dir, const VolumeMeta& meta) {
    meta.validate();
    if (!fs::is_directory(dir)) throw RuntimeError("no slices found: '" + dir.string() + "' is not a directory");
    const ScannedDir scanned = scan_slices(dir);
    if (scanned.max_index < 0) throw RuntimeError("no slices found in '" + dir.string() + "'");

    Volume vol;
    vol.meta = meta;
    vol.meta.subject_id = scanned.subject;
    vol.slices.reserve(static_cast<std::size_t>(meta.slice_count));
    for (int s = 0; s < meta.slice_count; ++s) {
        SliceId id{scanned.subject, s};
        const fs::path img_path = dir / slice_file(id);
        const fs::path mask_path = dir / mask_file(id);
        if (!fs::exists(img_path)) throw MissingSliceError(id, "missing image for slice " + id.str());
        if (!fs::exists(mask_path)) throw MissingSliceError(id, "missing mask for slice " + id.str());

        SlicePair pair;
        pair.id = id;
        pair.image = load_image(img_path, meta.spacing);
        pair.mask = load_mask(mask_path);
        if (pair.image.height != pair.mask.height || pair.image.width != pair.mask.width) {
            throw ValidationError("image and mask shapes differ for slice " + id.str());
        }
        vol.slices.push_back(std::move(pair));
    }
    return vol;
}

VolumeMeta read_volume_meta(const fs::path& dir) {
    const ScannedDir scanned = scan_slices(dir);
    if (scanned.max_index < 0) throw RuntimeError("no slices found in '" + dir.string() + "'");
    VolumeMeta meta;
    meta.subject_id = scanned.subject;
    meta.slice_count = scanned.max_index + 1;
    meta.spacing = {1.0, 1.0};
    meta.original_size = meta.resized_size = 0;

    const fs::path sidecar = dir / "meta.txt";
    if (fs::exists(sidecar)) {
        const auto kv = read_sidecar(sidecar);
        auto num = [&](const char* key, double fallback) {
            const auto it = kv.find(key);
            return it == kv.end() ? fallback : std::stod(it->second);
        };
        meta.slice_count = static_cast<int>(num("slice_count", meta.slice_count));
        meta.original_size = static_cast<int>(num("original_size", 0));
        meta.resized_size = static_cast<int>(num("resized_size", 0));
        meta.spacing.row_mm = num("spacing_row_mm", 1.0);
        meta.spacing.col_mm = num("spacing_col_mm", 1.0);
    }
    if (meta.original_size <= 0 || meta.resized_size <= 0) {
        // Size is only known after reading a slice.
        const png::GrayImage first = png::read_gray(dir / slice_file({scanned.subject, 0}));
        if (meta.original_size <= 0) meta.original_size = first.width;
        if (meta.resized_size <= 0) meta.resized_size = meta.original_size;
    }
    return meta;
}

Volume load_volume(const fs::path& dir) { return load_volume(dir, read_volume_meta(dir)); }

std::vector<Volume> load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw RuntimeError("no slices found: '" + dir.string() + "' is not a directory");
    if (scan_slices(dir).max_index >= 0) return {load_volume(dir)};
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) subdirs.push_back(entry.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    std::vector<Volume> out;
    for (const auto& sub : subdirs) {
        if (scan_slices(sub).max_index >= 0) out.push_back(load_volume(sub));
    }
    if (out.empty()) throw RuntimeError("no slices found in '" + dir.string() + "'");
    return out;
}

void save_volume(const Volume& volume, const fs::path& dir) {
    fs::create_directories(dir);
    for (const SlicePair& p : volume.slices) {
        std::vector<std::uint8_t> bytes(p.image.pixels.size());
        std::transform(p.image.pixels.begin(), p.image.pixels.end(), bytes.begin(), [](float v) {
            return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        });
        png::write_gray8(dir / slice_file(p.id), p.image.height, p.image.width, bytes);
        png::write_gray8(dir / mask_file(p.id), p.mask.height, p.mask.width, p.mask.labels);
    }
    std::ofstream meta(dir / "meta.txt");
    meta << "subject=" << volume.meta.subject_id << "\n"
         << "slice_count=" << volume.slices.size() << "\n"
         << "original_size=" << volume.meta.original_size << "\n"
         << "resized_size=" << volume.meta.resized_size << "\n";
    meta.precision(17);
    meta << "spacing_row_mm=" << volume.meta.spacing.row_mm << "\n"
         << "spacing_col_mm=" << volume.meta.spacing.col_mm << "\n";
    if (!meta) throw RuntimeError("cannot write " + (dir / "meta.txt").string());
}

ImageSlice resize_image(const ImageSlice& img, int target) {
    if (target <= 0) throw ValidationError("resize target must be >= 1, got " + std::to_string(target));
    if (img.height == target && img.width == target) return img;
    const double sy = static_cast<double>(img.height) / target;
    const double sx = static_cast<double>(img.width) / target;
    ImageSlice out(target, target, {img.spacing.row_mm * sy, img.spacing.col_mm * sx});
    for (int r = 0; r < target; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int c = 0; c < target; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            const double top = img.at(y0, x0) * (1.0 - wx) + img.at(y0, x1) * wx;
            const double bot = img.at(y1, x0) * (1.0 - wx) + img.at(y1, x1) * wx;
            out.at(r, c) = static_cast<float>(top * (1.0 - wy) + bot * wy);
        }
    }
    return out;
}

LabelMask resize_mask(const LabelMask& mask, int target) {
    if (target <= 0) throw ValidationError("resize target must be >= 1, got " + std::to_string(target));
    if (mask.height == target && mask.width == target) return mask;
    const double sy = static_cast<double>(mask.height) / target;
    const double sx = static_cast<double>(mask.width) / target;
    LabelMask out(target, target, mask.class_count);
    for (int r = 0; r < target; ++r) {
        const int ny = std::min(mask.height - 1, static_cast<int>(std::floor((r + 0.5) * sy)));
        for (int c = 0; c < target; ++c) {
            const int nx = std::min(mask.width - 1, static_cast<int>(std::floor((c + 0.5) * sx)));
            out.at(r, c) = mask.at(ny, nx);
        }
    }
    return out;
}

std::pair<ImageSlice, LabelMask> resize_pair(const ImageSlice& img, const LabelMask& mask, int target) {
    if (img.height != mask.height || img.width != mask.width) {
        throw ValidationError("image and mask shapes differ");
    }
    return {resize_image(img, target), resize_mask(mask, target)};
}

Volume resize_volume(const Volume& volume, int target) {
    Volume out;
    out.meta = volume.meta;
    out.meta.resized_size = target;
    out.slices.reserve(volume.size());
    for (const SlicePair& p : volume.slices) {
        auto [img, mask] = resize_pair(p.image, p.mask, target);
        out.slices.push_back({p.id, std::move(img), std::move(mask)});
    }
    if (!out.slices.empty()) out.meta.spacing = out.slices.front().image.spacing;
    return out;
}

Volume strip_edge_slices(const Volume& volume, int k) {
    const int n = static_cast<int>(volume.size());
    if (k < 0) throw ValidationError("edge strip count must be >= 0");
    if (2 * k >= n) {
        throw ValidationError("cannot strip " + std::to_string(k) + " slices from each end of a " + std::to_string(n) +
                              "-slice volume");
    }
    Volume out;
    out.meta = volume.meta;
    out.slices.assign(volume.slices.begin() + k, volume.slices.end() - k);
    out.meta.slice_count = static_cast<int>(out.slices.size());
    return out;
}

Volume make_phantom(std::uint64_t seed, const VolumeMeta& meta) {
    meta.validate();
    const int n = meta.slice_count;
    const int size = meta.original_size;

    NoiseSource shape_rng(splitmix64(seed ^ 0x5eed5eedULL));
    const double cx = 0.5 + 0.04 * (shape_rng.uniform() - 0.5);
    const double joint = 0.5 + 0.04 * (shape_rng.uniform() - 0.5);
    const double half_width = 0.34 + 0.04 * (shape_rng.uniform() - 0.5);
    const double fc_thick = 0.045 + 0.01 * shape_rng.uniform();
    const double tc_thick = 0.040 + 0.01 * shape_rng.uniform();
    const double gap = 0.012;
    const double condyle = 0.03;

    constexpr float kBackground = 0.08f, kFB = 0.45f, kFC = 0.85f, kTB = 0.52f, kTC = 0.70f;
    constexpr double kNoise = 0.03;

    Volume vol;
    vol.meta = meta;
    vol.meta.resized_size = std::min(meta.resized_size, size);
    vol.slices.reserve(static_cast<std::size_t>(n));

    for (int s = 0; s < n; ++s) {
        const double t = n > 1 ? (s - (n - 1) / 2.0) / ((n - 1) / 2.0) : 0.0;
        auto profile = [t](double extent) {
            const double q = t / extent;
            return q * q < 1.0 ? std::sqrt(1.0 - q * q) : 0.0;
        };
        const double bone = profile(0.85);
        const double cart = profile(0.65);

        SlicePair p;
        p.id = {meta.subject_id, s};
        p.mask = LabelMask(size, size, kMultiClassCount);
        std::vector<float> raw(static_cast<std::size_t>(size) * size);
        NoiseSource noise(splitmix64(seed * 0x100000001b3ULL + static_cast<std::uint64_t>(s) + 1));

        for (int r = 0; r < size; ++r) {
            const double v = (r + 0.5) / size;
            for (int c = 0; c < size; ++c) {
                const double u = (c + 0.5) / size;
                const double d = (u - cx) / half_width;
                const double ad = std::abs(d);
                // Femoral surface: two condyles bulging down at d = +-0.5.
                const double femur_end = joint - gap / 2 - fc_thick - condyle * std::cos(2.0 * std::numbers::pi * d);
                const double fc_end = femur_end + fc_thick;
                const double tc_start = fc_end + gap;
                const double tb_start = tc_start + tc_thick;

                Tissue label = Tissue::Background;
                if (v >= 0.06 && v < femur_end && ad < bone) {
                    label = Tissue::FB;
                } else if (v >= femur_end && v < fc_end && ad < 0.85 * cart) {
                    label = Tissue::FC;
                } else if (v >= tc_start && v < tb_start && ad < 0.80 * cart) {
                    label = Tissue::TC;
                } else if (v >= tb_start && v < 0.94 && ad < 0.92 * bone) {
                    label = Tissue::TB;
                }
                float base = kBackground;
                switch (label) {
                    case Tissue::FB: base = kFB; break;
                    case Tissue::FC: base = kFC; break;
                    case Tissue::TB: base = kTB; break;
                    case Tissue::TC: base = kTC; break;
                    case Tissue::Background: break;
                }
                p.mask.at(r, c) = static_cast<std::uint8_t>(label);
                raw[static_cast<std::size_t>(r) * size + c] =
                    static_cast<float>(std::clamp(base + kNoise * noise.gaussian(), 0.0, 1.0));
            }
        }

        // Quantize to the 8-bit levels a PNG round trip would produce.
        const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
        const float span = *hi - *lo;
        std::vector<std::uint16_t> levels(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const float scaled = span > 0.0f ? (raw[i] - *lo) / span : 0.0f;
            levels[i] = static_cast<std::uint16_t>(std::lround(scaled * 255.0f));
        }
        p.image = ImageSlice(size, size, meta.spacing);
        p.image.pixels = normalize_minmax(levels);
        vol.slices.push_back(std::move(p));
    }
    return vol;
}

}  // namespace mtra
