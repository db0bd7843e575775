#include "dicot/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dicot/errors.hpp"
#include "dicot/rng.hpp"

namespace dicot {

void TimeSeriesBatch::validate() const {
    if (values.rank() != 3)
        throw ShapeError("batch values must be B x T x D, got " + shape_to_string(values.shape));
    if (!labels.empty()) {
        if (static_cast<int64_t>(labels.size()) != size())
            throw ShapeError("label count " + std::to_string(labels.size()) +
                             " does not match batch size " + std::to_string(size()));
        for (int64_t l : labels)
            if (l < -1 || l >= n_classes)
                throw ShapeError("label " + std::to_string(l) + " outside [-1, " +
                                 std::to_string(n_classes) + ")");
    }
}

void SyntheticSpec::validate() const {
    if (n_per_class < 1 || T < 1 || D < 1) throw ConfigError("synthetic sizes must be positive");
    if (C < 2) throw ConfigError("synthetic generator needs C >= 2 classes");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (cycles_base <= 0.0) throw ConfigError("cycles_base must be > 0");
}

TimeSeriesBatch load_ucr_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");

    std::vector<double> raw_labels;
    std::vector<std::vector<double>> rows;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t,") == std::string::npos) continue;

        std::vector<double> fields;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t next = line.find_first_of("\t,", pos);
            if (next == std::string::npos) next = line.size();
            std::string tok = line.substr(pos, next - pos);
            pos = next + 1;
            // trim spaces
            const size_t b = tok.find_first_not_of(" ");
            if (b == std::string::npos) {
                if (pos > line.size()) break;  // trailing separator
                throw FormatError("line " + std::to_string(line_no) + ": empty field");
            }
            const size_t e = tok.find_last_not_of(" ");
            tok = tok.substr(b, e - b + 1);
            try {
                size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size())
                    throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" + tok + "'");
                if (std::isnan(v))
                    throw FormatError("line " + std::to_string(line_no) + ": NaN value");
                fields.push_back(v);
            } catch (const FormatError&) {
                throw;
            } catch (const std::exception&) {
                throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" + tok + "'");
            }
        }
        if (fields.size() < 2)
            throw FormatError("line " + std::to_string(line_no) + ": need a label and at least one value");
        raw_labels.push_back(fields[0]);
        rows.emplace_back(fields.begin() + 1, fields.end());
        if (rows.size() > 1 && rows.back().size() != rows.front().size())
            throw FormatError("line " + std::to_string(line_no) + ": row has " +
                              std::to_string(rows.back().size()) + " values, expected " +
                              std::to_string(rows.front().size()));
    }
    if (rows.empty()) throw FormatError("'" + path + "' contains no data rows");

    // dense remap preserving sorted original order
    std::map<double, int64_t> remap;
    for (double l : raw_labels) remap.emplace(l, 0);
    int64_t next_id = 0;
    for (auto& kv : remap) kv.second = next_id++;

    const int64_t B = static_cast<int64_t>(rows.size());
    const int64_t T = static_cast<int64_t>(rows.front().size());
    TimeSeriesBatch batch;
    batch.values = Tensor::zeros({B, T, 1});
    for (int64_t i = 0; i < B; ++i)
        for (int64_t t = 0; t < T; ++t)
            batch.values.at3(i, t, 0) = rows[static_cast<size_t>(i)][static_cast<size_t>(t)];
    batch.labels.resize(static_cast<size_t>(B));
    for (int64_t i = 0; i < B; ++i)
        batch.labels[static_cast<size_t>(i)] = remap.at(raw_labels[static_cast<size_t>(i)]);
    batch.n_classes = next_id;
    batch.validate();
    return batch;
}

namespace {

constexpr char kDataMagic[8] = {'D', 'I', 'C', 'O', 'T', 'D', '1', '\0'};

void write_u32le(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32le(std::istream& in, const std::string& what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw FormatError("dataset file truncated while reading " + what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_binary(const TimeSeriesBatch& batch, const std::string& path) {
    batch.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    const int64_t N = batch.size(), T = batch.window_length(), D = batch.dims();
    out.write(kDataMagic, 8);
    write_u32le(out, static_cast<uint32_t>(N));
    write_u32le(out, static_cast<uint32_t>(T));
    write_u32le(out, static_cast<uint32_t>(D));
    write_u32le(out, static_cast<uint32_t>(batch.n_classes));
    for (double v : batch.values.data) {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32le(out, bits);
    }
    for (int64_t i = 0; i < N; ++i) {
        const int32_t l = batch.labels.empty() ? -1 : static_cast<int32_t>(batch.labels[static_cast<size_t>(i)]);
        write_u32le(out, static_cast<uint32_t>(l));
    }
    if (!out) throw FormatError("write failed for '" + path + "'");
}

TimeSeriesBatch load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kDataMagic, 8) != 0)
        throw FormatError("'" + path + "' is not a dataset file (bad magic)");
    const int64_t N = read_u32le(in, "N");
    const int64_t T = read_u32le(in, "T");
    const int64_t D = read_u32le(in, "D");
    const int64_t C = read_u32le(in, "C");
    if (N < 1 || T < 1 || D < 1)
        throw FormatError("dataset header has zero extent");

    TimeSeriesBatch batch;
    batch.n_classes = C;
    batch.values = Tensor::zeros({N, T, D});
    const int64_t n_vals = N * T * D;
    std::vector<unsigned char> buf(static_cast<size_t>(n_vals) * 4);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size())
        throw FormatError("dataset file truncated while reading values");
    for (int64_t i = 0; i < n_vals; ++i) {
        const unsigned char* b = &buf[static_cast<size_t>(i) * 4];
        uint32_t bits = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                        (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        batch.values.data[static_cast<size_t>(i)] = static_cast<double>(f);
    }
    batch.labels.resize(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i)
        batch.labels[static_cast<size_t>(i)] = static_cast<int32_t>(read_u32le(in, "labels"));
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) throw FormatError("'" + path + "' has trailing bytes");
    batch.validate();
    return batch;
}

TimeSeriesBatch gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng = make_rng(spec.seed);
    const int64_t B = spec.C * spec.n_per_class;
    TimeSeriesBatch batch;
    batch.values = Tensor::zeros({B, spec.T, spec.D});
    batch.labels.resize(static_cast<size_t>(B));
    batch.n_classes = spec.C;

    const double two_pi = 2.0 * std::acos(-1.0);
    int64_t w = 0;
    for (int64_t c = 0; c < spec.C; ++c) {
        const double freq = static_cast<double>(c + 1) * spec.cycles_base;
        for (int64_t i = 0; i < spec.n_per_class; ++i, ++w) {
            const double phi = uniform_real(rng, 0.0, two_pi);
            for (int64_t t = 0; t < spec.T; ++t) {
                const double base =
                    std::sin(two_pi * freq * static_cast<double>(t) / static_cast<double>(spec.T) + phi);
                for (int64_t d = 0; d < spec.D; ++d) {
                    const double eps = spec.noise_sigma > 0.0 ? normal(rng, 0.0, spec.noise_sigma) : 0.0;
                    batch.values.at3(w, t, d) = base + eps;
                }
            }
            batch.labels[static_cast<size_t>(w)] = c;
        }
    }
    batch.validate();
    return batch;
}

}  // namespace dicot
