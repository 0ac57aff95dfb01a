#include "uci/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace uci {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'U', 'C', 'I', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ofstream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void append_array(json& arrays, uint64_t& offset, const std::string& name,
                  const std::vector<int>& shape, size_t count) {
    arrays.push_back({{"name", name},
                      {"shape", shape},
                      {"dtype", "f64"},
                      {"offset", offset},
                      {"count", count}});
    offset += count * sizeof(double);
}
} // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamRegistry& params,
                     const json& config_echo, const Adam* adam, const TrainSnapshot* snapshot) {
    json header;
    header["version"] = 1;
    header["config"] = config_echo;
    if (snapshot) {
        header["train_state"] = {{"epoch", snapshot->epoch},
                                 {"step", snapshot->step},
                                 {"adam_t", snapshot->adam_t}};
    }

    json arrays = json::array();
    uint64_t offset = 0;
    for (const Param* p : params.items())
        append_array(arrays, offset, p->name, p->shape, p->size());
    if (adam) {
        Adam& a = *const_cast<Adam*>(adam);
        for (size_t i = 0; i < params.items().size(); ++i) {
            const Param* p = params.items()[i];
            append_array(arrays, offset, "adam.m/" + p->name, p->shape, a.m()[i].size());
            append_array(arrays, offset, "adam.v/" + p->name, p->shape, a.v()[i].size());
        }
    }
    header["arrays"] = arrays;

    const std::string header_str = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("checkpoint: cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_u64(out, header_str.size());
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    auto write_vec = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    for (const Param* p : params.items())
        write_vec(p->value);
    if (adam) {
        Adam& a = *const_cast<Adam*>(adam);
        for (size_t i = 0; i < params.items().size(); ++i) {
            write_vec(a.m()[i]);
            write_vec(a.v()[i]);
        }
    }
    if (!out)
        throw IoError("checkpoint: short write to " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("checkpoint: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("checkpoint: bad magic in " + path.string());
    uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || header_len == 0 || header_len > (1u << 26))
        throw IoError("checkpoint: bad header length in " + path.string());
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len))
        throw IoError("checkpoint: truncated header in " + path.string());

    LoadedCheckpoint ckpt;
    ckpt.header = json::parse(header_str, nullptr, false);
    if (ckpt.header.is_discarded())
        throw IoError("checkpoint: malformed header json in " + path.string());
    if (ckpt.header.value("version", 0) != 1)
        throw IoError("checkpoint: unsupported version in " + path.string());
    ckpt.config_echo = ckpt.header.value("config", json::object());
    if (ckpt.header.contains("train_state")) {
        TrainSnapshot s;
        s.epoch = ckpt.header["train_state"].value("epoch", 0);
        s.step = ckpt.header["train_state"].value("step", static_cast<int64_t>(0));
        s.adam_t = ckpt.header["train_state"].value("adam_t", static_cast<int64_t>(0));
        ckpt.snapshot = s;
    }

    for (const auto& a : ckpt.header.at("arrays")) {
        const std::string name = a.at("name").get<std::string>();
        const size_t count = a.at("count").get<size_t>();
        if (a.at("dtype").get<std::string>() != "f64")
            throw IoError("checkpoint: unsupported dtype for array " + name);
        std::vector<double> data(count);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
            throw IoError("checkpoint: truncated array " + name + " in " + path.string());
        ckpt.arrays.emplace_back(name, std::move(data));
        ckpt.shapes.emplace_back(name, a.at("shape").get<std::vector<int>>());
    }
    return ckpt;
}

const std::vector<double>* LoadedCheckpoint::find(const std::string& name) const {
    for (const auto& [n, v] : arrays)
        if (n == name)
            return &v;
    return nullptr;
}

void apply_checkpoint(const LoadedCheckpoint& ckpt, ParamRegistry& params, Adam* adam) {
    for (Param* p : params.items()) {
        const std::vector<double>* src = ckpt.find(p->name);
        if (!src)
            throw ConfigError("checkpoint: missing array '" + p->name + "'");
        if (src->size() != p->size())
            throw ConfigError("checkpoint: size mismatch for '" + p->name + "'");
        p->value = *src;
    }
    if (adam) {
        adam->attach(params);
        for (size_t i = 0; i < params.items().size(); ++i) {
            const Param* p = params.items()[i];
            const std::vector<double>* m = ckpt.find("adam.m/" + p->name);
            const std::vector<double>* v = ckpt.find("adam.v/" + p->name);
            if (!m || !v)
                throw ConfigError("checkpoint: missing optimizer state for '" + p->name + "'");
            if (m->size() != p->size() || v->size() != p->size())
                throw ConfigError("checkpoint: optimizer state size mismatch for '" + p->name + "'");
            adam->m()[i] = *m;
            adam->v()[i] = *v;
        }
        if (ckpt.snapshot)
            adam->set_t(ckpt.snapshot->adam_t);
    }
}

} // namespace uci
