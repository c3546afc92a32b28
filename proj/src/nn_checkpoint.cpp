#include "situ3d/nn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <vector>

namespace situ3d::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace {

struct ManifestEntry {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
};

struct Manifest {
    std::map<std::string, std::string> meta;
    std::vector<ManifestEntry> tensors;
};

Manifest read_manifest(std::istream& in, const std::string& path) {
    Manifest m;
    std::string line;
    if (!std::getline(in, line) || line != "situ3d-checkpoint v1")
        throw SchemaError(path + ": missing 'situ3d-checkpoint v1' header");
    while (std::getline(in, line)) {
        if (line == "DATA") return m;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "meta") {
            std::string key;
            ls >> key;
            std::string value;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            m.meta[key] = value;
        } else if (tag == "tensor") {
            ManifestEntry e;
            if (!(ls >> e.name >> e.rows >> e.cols)) throw SchemaError(path + ": bad tensor line");
            std::string dtype;
            if (!(ls >> dtype) || dtype != "f64")
                throw SchemaError(path + ": unsupported tensor dtype");
            m.tensors.push_back(std::move(e));
        } else {
            throw SchemaError(path + ": unexpected manifest line '" + line + "'");
        }
    }
    throw SchemaError(path + ": manifest missing DATA marker");
}

} // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params,
                     const std::map<std::string, std::string>& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << "situ3d-checkpoint v1\n";
    for (const auto& [key, value] : meta) out << "meta " << key << " " << value << "\n";
    for (const Param& p : params)
        out << "tensor " << p.name << " " << p.value.rows() << " " << p.value.cols() << " f64\n";
    out << "DATA\n";
    for (const Param& p : params) {
        for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
                const double v = p.value(i, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
        }
    }
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::map<std::string, std::string> load_checkpoint(const std::string& path, ParameterSet& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    const Manifest manifest = read_manifest(in, path);
    if (manifest.tensors.size() != params.count())
        throw SchemaError(path + ": tensor count does not match the model");
    for (const ManifestEntry& e : manifest.tensors) {
        if (!params.contains(e.name)) throw SchemaError(path + ": unexpected tensor " + e.name);
        Param& p = params.at(e.name);
        if (p.value.rows() != e.rows || p.value.cols() != e.cols)
            throw SchemaError(path + ": shape mismatch for tensor " + e.name);
        for (Eigen::Index i = 0; i < e.rows; ++i) {
            for (Eigen::Index j = 0; j < e.cols; ++j) {
                double v = 0.0;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                if (!in) throw SchemaError(path + ": truncated tensor data");
                p.value(i, j) = v;
            }
        }
    }
    return manifest.meta;
}

std::map<std::string, std::string> read_checkpoint_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    return read_manifest(in, path).meta;
}

} // namespace situ3d::nn
