#include "wnci/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "wnci/errors.hpp"

namespace wnci {

namespace {

constexpr std::array<char, 8> kMagic = {'W', 'N', 'C', 'I', 'M', 'L', 'P', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    std::array<char, sizeof(T)> bytes;
    if (!is.read(bytes.data(), sizeof(T))) throw FormatError("checkpoint: unexpected end of file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

std::uint8_t activation_code(Activation a) {
    switch (a) {
        case Activation::relu: return 0;
        case Activation::tanh: return 1;
        case Activation::softplus: return 2;
        case Activation::identity: return 3;
    }
    return 255;
}

Activation activation_from_code(std::uint8_t c) {
    switch (c) {
        case 0: return Activation::relu;
        case 1: return Activation::tanh;
        case 2: return Activation::softplus;
        case 3: return Activation::identity;
        default: throw FormatError("checkpoint: unknown activation code " + std::to_string(c));
    }
}

}  // namespace

void write_checkpoint(std::ostream& os, const MlpModel& model) {
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kCheckpointVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(model.arch.layer_widths.size()));
    for (std::size_t w : model.arch.layer_widths) put<std::uint32_t>(os, static_cast<std::uint32_t>(w));
    put<std::uint8_t>(os, activation_code(model.arch.activation));
    put<std::uint8_t>(os, model.arch.use_bias ? 1 : 0);
    put<std::uint16_t>(os, 0);
    put<std::uint64_t>(os, model.theta.size());
    for (double v : model.theta) put<double>(os, v);
    if (!os) throw FormatError("checkpoint: write failed");
}

MlpModel read_checkpoint(std::istream& is) {
    std::array<char, 8> magic;
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("checkpoint: bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const auto count = get<std::uint32_t>(is);
    if (count < 2 || count > 4096) throw FormatError("checkpoint: implausible layer count");
    MlpArch arch;
    for (std::uint32_t i = 0; i < count; ++i) arch.layer_widths.push_back(get<std::uint32_t>(is));
    arch.activation = activation_from_code(get<std::uint8_t>(is));
    arch.use_bias = get<std::uint8_t>(is) != 0;
    get<std::uint16_t>(is);
    const auto p = get<std::uint64_t>(is);
    arch.validate();
    if (p != arch.num_params()) throw FormatError("checkpoint: parameter count does not match architecture");
    Vector theta(p);
    for (auto& v : theta) v = get<double>(is);
    return MlpModel(std::move(arch), std::move(theta));
}

void save_checkpoint(const std::string& path, const MlpModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    write_checkpoint(os, model);
}

MlpModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path);
    return read_checkpoint(is);
}

void write_dataset(std::ostream& os, const DatasetFile& file) {
    const Dataset& d = file.data;
    nlohmann::json j;
    j["format"] = "wnci-dataset";
    j["version"] = 1;
    j["d"] = d.dim();
    j["n"] = d.size();
    j["sigma"] = d.sigma;
    j["seeds"] = {{"design", file.seeds.design}, {"truth", file.seeds.truth}, {"noise", file.seeds.noise}};
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto r = d.inputs.row(i);
        rows.push_back(Vector(r.begin(), r.end()));
    }
    j["inputs"] = std::move(rows);
    j["responses"] = d.responses;
    j["truth"] = d.truth ? nlohmann::json(*d.truth) : nlohmann::json(nullptr);
    os << j.dump(1) << '\n';
}

DatasetFile read_dataset(std::istream& is) {
    nlohmann::json j;
    try {
        is >> j;
        if (j.at("format") != "wnci-dataset") throw FormatError("dataset: wrong format tag");
        const std::size_t dim = j.at("d"), n = j.at("n");
        DenseMatrix x(n, dim);
        const auto& rows = j.at("inputs");
        if (rows.size() != n) throw FormatError("dataset: inputs row count != n");
        for (std::size_t i = 0; i < n; ++i) {
            const Vector r = rows[i].get<Vector>();
            if (r.size() != dim) throw FormatError("dataset: input row width != d");
            std::copy(r.begin(), r.end(), x.row(i).begin());
        }
        std::optional<Vector> truth;
        if (!j.at("truth").is_null()) truth = j.at("truth").get<Vector>();
        DatasetFile f{Dataset(std::move(x), j.at("responses").get<Vector>(), j.at("sigma").get<double>(),
                              std::move(truth)),
                      {}};
        const auto& s = j.at("seeds");
        f.seeds = {s.at("design"), s.at("truth"), s.at("noise")};
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("dataset: ") + e.what());
    }
}

void save_dataset(const std::string& path, const DatasetFile& file) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    write_dataset(os, file);
}

DatasetFile load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path);
    return read_dataset(is);
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
    const auto old_precision = os.precision(17);
    for (std::size_t k = 0; k < data.dim(); ++k) os << 'x' << k << ',';
    os << 'y' << (data.truth ? ",truth" : "") << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.inputs.row(i)) os << v << ',';
        os << data.responses[i];
        if (data.truth) os << ',' << (*data.truth)[i];
        os << '\n';
    }
    os.precision(old_precision);
}

}  // namespace wnci
