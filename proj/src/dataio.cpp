#include "esn/dataio.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace esn {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are not supported");

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

FrameDataset load_frames(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_frames: cannot open " + path);

    std::vector<double> values;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> boundaries{0};
    std::size_t feature_dim = 0, line_no = 0;
    bool pending_boundary = false;

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        std::vector<std::string> fields;
        std::string field;
        while (row >> field) fields.push_back(field);
        if (fields.empty()) {
            if (!labels.empty()) pending_boundary = true;
            continue;
        }
        if (fields.size() < 2) parse_fail(path, line_no, "row needs features plus a label");
        if (feature_dim == 0) feature_dim = fields.size() - 1;
        if (fields.size() - 1 != feature_dim)
            parse_fail(path, line_no, "ragged row: expected " + std::to_string(feature_dim) +
                                          " features, got " + std::to_string(fields.size() - 1));
        if (pending_boundary) {
            boundaries.push_back(labels.size());
            pending_boundary = false;
        }
        for (std::size_t i = 0; i < feature_dim; ++i) {
            char* end = nullptr;
            const double v = std::strtod(fields[i].c_str(), &end);
            if (end == fields[i].c_str() || *end != '\0' || !std::isfinite(v))
                parse_fail(path, line_no, "non-numeric feature '" + fields[i] + "'");
            values.push_back(v);
        }
        char* end = nullptr;
        const long long lbl = std::strtoll(fields.back().c_str(), &end, 10);
        if (end == fields.back().c_str() || *end != '\0' || lbl < 0)
            parse_fail(path, line_no, "bad label '" + fields.back() + "'");
        labels.push_back(static_cast<std::size_t>(lbl));
    }
    if (labels.empty()) throw DataError("load_frames: " + path + " contains no frames");

    const std::size_t n = labels.size();
    FrameDataset ds;
    ds.frames = Matrix(feature_dim, n);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t r = 0; r < feature_dim; ++r)
            ds.frames.at(r, c) = values[c * feature_dim + r];
    ds.labels = std::move(labels);
    ds.boundaries = std::move(boundaries);
    for (std::size_t l : ds.labels) ds.num_classes = std::max(ds.num_classes, l + 1);
    return ds;
}

void save_frames(const FrameDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_frames: cannot open " + path);
    std::size_t next_boundary = 1;
    char buf[40];
    for (std::size_t c = 0; c < ds.size(); ++c) {
        if (next_boundary < ds.boundaries.size() && ds.boundaries[next_boundary] == c) {
            out << '\n';
            ++next_boundary;
        }
        for (std::size_t r = 0; r < ds.feature_dim(); ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.frames.at(r, c));
            out << buf << ' ';
        }
        out << ds.labels[c] << '\n';
    }
    if (!out) throw DataError("save_frames: write failed on " + path);
}

FrameDataset window_context(const FrameDataset& ds, std::size_t width) {
    if (width % 2 == 0) throw DataError("window_context: width must be odd");
    if (width == 1) return ds;
    const std::size_t half = (width - 1) / 2;
    const std::size_t d = ds.feature_dim(), n = ds.size();

    FrameDataset out;
    out.frames = Matrix(d * width, n);
    out.labels = ds.labels;
    out.boundaries = ds.boundaries;
    out.num_classes = ds.num_classes;

    for (std::size_t u = 0; u < ds.boundaries.size(); ++u) {
        const std::size_t begin = ds.boundaries[u];
        const std::size_t end = (u + 1 < ds.boundaries.size()) ? ds.boundaries[u + 1] : n;
        for (std::size_t c = begin; c < end; ++c) {
            for (std::size_t w = 0; w < width; ++w) {
                // Edge frames are replicated at utterance boundaries.
                const long long want = static_cast<long long>(c) + static_cast<long long>(w) -
                                       static_cast<long long>(half);
                const std::size_t src = want < static_cast<long long>(begin) ? begin
                                        : want >= static_cast<long long>(end) ? end - 1
                                        : static_cast<std::size_t>(want);
                for (std::size_t r = 0; r < d; ++r)
                    out.frames.at(w * d + r, c) = ds.frames.at(r, src);
            }
        }
    }
    return out;
}

FrameDataset gen_synthetic(std::size_t num_classes, std::size_t feature_dim, std::size_t length,
                           double memory_strength, std::uint64_t seed, double noise_sigma) {
    if (num_classes == 0 || feature_dim == 0 || length == 0)
        throw DataError("gen_synthetic: parameters must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, num_classes - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix means(feature_dim, num_classes);
    for (double& v : means.data()) v = unit(rng);

    FrameDataset ds;
    ds.frames = Matrix(feature_dim, length);
    ds.labels.resize(length);
    ds.boundaries = {0};
    ds.num_classes = num_classes;

    std::size_t cls = pick(rng), prev = num_classes;  // no memory term on the first frame
    for (std::size_t t = 0; t < length; ++t) {
        if (t > 0) {
            prev = cls;
            if (coin(rng) >= 0.9) {
                // Jump uniformly to one of the other classes.
                std::size_t j = std::uniform_int_distribution<std::size_t>(0, num_classes - 2)(rng);
                cls = (j >= cls) ? j + 1 : j;
            }
        }
        ds.labels[t] = cls;
        for (std::size_t r = 0; r < feature_dim; ++r) {
            // Normalized mix keeps the signal scale independent of memory_strength,
            // so the memory term strictly degrades any memoryless classifier.
            double sig = means.at(r, cls);
            if (prev < num_classes) sig = (sig + memory_strength * means.at(r, prev)) / (1.0 + memory_strength);
            ds.frames.at(r, t) = sig + noise_sigma * gauss(rng);
        }
    }
    return ds;
}

FrameDataset slice_frames(const FrameDataset& ds, std::size_t begin, std::size_t count) {
    if (begin + count > ds.size()) throw ShapeError("slice_frames: range out of bounds");
    FrameDataset out;
    out.frames = Matrix(ds.feature_dim(), count);
    out.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + begin + count);
    out.num_classes = ds.num_classes;
    out.boundaries = {0};
    for (std::size_t b : ds.boundaries)
        if (b > begin && b < begin + count) out.boundaries.push_back(b - begin);
    for (std::size_t c = 0; c < count; ++c)
        for (std::size_t r = 0; r < ds.feature_dim(); ++r)
            out.frames.at(r, c) = ds.frames.at(r, begin + c);
    return out;
}

Matrix one_hot_targets(const FrameDataset& ds, std::size_t num_classes) {
    Matrix t(num_classes, ds.size());
    for (std::size_t c = 0; c < ds.size(); ++c) {
        if (ds.labels[c] >= num_classes)
            throw DataError("one_hot_targets: label " + std::to_string(ds.labels[c]) +
                            " out of range");
        t.at(ds.labels[c], c) = 1.0;
    }
    return t;
}

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, std::size_t& offset,
                const std::string& path) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw DataError("load_model: " + path + " truncated at offset " + std::to_string(offset));
    offset += n;
}

}  // namespace

void save_model(const ModelParams& params, double lambda, double mu, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_model: cannot open " + path);
    const std::uint64_t d = params.input_dim(), h = params.hidden_dim(), o = params.output_dim();
    const std::uint64_t nnz = params.w_rec.pattern().nnz();

    write_bytes(out, kMagic, 4);
    write_bytes(out, &kVersion, 4);
    for (std::uint64_t v : {d, h, o, nnz}) write_bytes(out, &v, 8);
    write_bytes(out, &lambda, 8);
    write_bytes(out, &mu, 8);
    write_bytes(out, params.w.data().data(), 8 * params.w.size());
    for (const auto& [r, c] : params.w_rec.pattern().nonzeros()) {
        const std::uint64_t rr = r, cc = c;
        write_bytes(out, &rr, 8);
        write_bytes(out, &cc, 8);
    }
    write_bytes(out, params.w_rec.values().data(), 8 * nnz);
    write_bytes(out, params.u.data().data(), 8 * params.u.size());
    if (!out) throw DataError("save_model: write failed on " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_model: cannot open " + path);
    std::size_t offset = 0;

    char magic[4];
    read_bytes(in, magic, 4, offset, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("load_model: " + path + " has bad magic at offset 0");
    std::uint32_t version = 0;
    read_bytes(in, &version, 4, offset, path);
    if (version != kVersion)
        throw DataError("load_model: " + path + " has unsupported version " +
                        std::to_string(version));

    std::uint64_t d, h, o, nnz;
    read_bytes(in, &d, 8, offset, path);
    read_bytes(in, &h, 8, offset, path);
    read_bytes(in, &o, 8, offset, path);
    read_bytes(in, &nnz, 8, offset, path);

    LoadedModel m;
    read_bytes(in, &m.lambda, 8, offset, path);
    read_bytes(in, &m.mu, 8, offset, path);

    std::vector<double> w(d * h);
    read_bytes(in, w.data(), 8 * w.size(), offset, path);
    std::vector<std::pair<std::size_t, std::size_t>> nz(nnz);
    for (auto& [r, c] : nz) {
        std::uint64_t rr, cc;
        read_bytes(in, &rr, 8, offset, path);
        read_bytes(in, &cc, 8, offset, path);
        r = rr;
        c = cc;
    }
    std::vector<double> vals(nnz);
    read_bytes(in, vals.data(), 8 * vals.size(), offset, path);
    std::vector<double> u((h + d) * o);
    read_bytes(in, u.data(), 8 * u.size(), offset, path);

    m.params.w = Matrix(d, h, std::move(w));
    m.params.w_rec = SparseMatrix(SparsePattern(h, h, std::move(nz)), std::move(vals));
    m.params.u = Matrix(h + d, o, std::move(u));
    return m;
}

}  // namespace esn
