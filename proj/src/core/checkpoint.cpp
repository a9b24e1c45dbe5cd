#include "checkpoint.hpp"

#include "errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace mtra {

namespace {

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw ValidationError("truncated checkpoint '" + path.string() + "'");
    }
    return v;
}

std::uint8_t dtype_code(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32: return 0;
        case torch::kFloat64: return 1;
        case torch::kInt64: return 2;
        default: throw ValidationError("unsupported tensor dtype in checkpoint");
    }
}

torch::ScalarType dtype_from_code(std::uint8_t c) {
    switch (c) {
        case 0: return torch::kFloat32;
        case 1: return torch::kFloat64;
        case 2: return torch::kInt64;
        default: throw ValidationError("unknown dtype code in checkpoint");
    }
}

void write_entry(std::ostream& out, const std::string& name, std::uint8_t kind, const torch::Tensor& t) {
    const auto c = t.detach().contiguous().cpu();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint8_t>(out, kind);
    put<std::uint8_t>(out, dtype_code(c.scalar_type()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.dim()));
    for (int64_t d : c.sizes()) put<std::int64_t>(out, d);
    out.write(static_cast<const char*>(c.data_ptr()), static_cast<std::streamsize>(c.nbytes()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, net::MtraUnet& model) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write checkpoint '" + path.string() + "'");
    out.write(kCheckpointMagic, sizeof kCheckpointMagic - 1);
    const std::string text = config.to_text();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put<std::uint64_t>(out, config.seed);

    const auto params = model->named_parameters(/*recurse=*/true);
    const auto buffers = model->named_buffers(/*recurse=*/true);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() + buffers.size()));
    for (const auto& item : params) write_entry(out, item.key(), 0, item.value());
    for (const auto& item : buffers) write_entry(out, item.key(), 1, item.value());
    if (!out) throw RuntimeError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("cannot open checkpoint '" + path.string() + "'");
    char magic[sizeof kCheckpointMagic - 1];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
        throw ValidationError("'" + path.string() + "' is not an MTRA1 checkpoint");
    }
    const auto text_len = get<std::uint32_t>(in, path);
    std::string text(text_len, '\0');
    if (!in.read(text.data(), text_len)) throw ValidationError("truncated checkpoint '" + path.string() + "'");
    Checkpoint ck;
    ck.config = config_from_text(text);
    ck.config.seed = get<std::uint64_t>(in, path);
    ck.config.model.seed = ck.config.seed;
    ck.model = net::build_model(ck.config.model);

    std::map<std::string, torch::Tensor> targets;
    for (auto& item : ck.model->named_parameters(true)) targets.emplace(item.key(), item.value());
    for (auto& item : ck.model->named_buffers(true)) targets.emplace(item.key(), item.value());

    const auto count = get<std::uint32_t>(in, path);
    if (count != targets.size()) {
        throw ValidationError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                              std::to_string(targets.size()));
    }
    torch::NoGradGuard no_grad;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw ValidationError("truncated checkpoint '" + path.string() + "'");
        get<std::uint8_t>(in, path);  // kind; the name alone identifies the slot
        const auto dtype = dtype_from_code(get<std::uint8_t>(in, path));
        const auto ndim = get<std::uint32_t>(in, path);
        std::vector<int64_t> dims(ndim);
        for (auto& d : dims) d = get<std::int64_t>(in, path);

        const auto it = targets.find(name);
        if (it == targets.end()) throw ValidationError("checkpoint tensor '" + name + "' has no slot in the model");
        torch::Tensor& dst = it->second;
        if (dst.sizes() != torch::IntArrayRef(dims)) {
            throw ValidationError("checkpoint tensor '" + name + "' has shape " + c10::str(torch::IntArrayRef(dims)) +
                                  ", model expects " + c10::str(dst.sizes()));
        }
        auto buf = torch::empty(dims, torch::TensorOptions().dtype(dtype));
        if (!in.read(static_cast<char*>(buf.data_ptr()), static_cast<std::streamsize>(buf.nbytes()))) {
            throw ValidationError("truncated checkpoint '" + path.string() + "'");
        }
        dst.copy_(buf);
    }
    return ck;
}

}  // namespace mtra
