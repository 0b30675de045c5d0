#include "imret/feature_store.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace imret {

namespace {

constexpr char kMagic[4] = {'F', 'V', 'S', '1'};

void write_u16le(std::ostream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f32le(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32le(out, bits);
}

bool read_bytes(std::istream& in, void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    return in.gcount() == static_cast<std::streamsize>(n);
}

bool read_u16le(std::istream& in, std::uint16_t& v) {
    unsigned char b[2];
    if (!read_bytes(in, b, 2)) return false;
    v = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    return true;
}

bool read_u32le(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!read_bytes(in, b, 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

bool read_f32le(std::istream& in, float& v) {
    std::uint32_t bits;
    if (!read_u32le(in, bits)) return false;
    std::memcpy(&v, &bits, 4);
    return true;
}

[[noreturn]] void record_error(const std::filesystem::path& path, std::size_t record,
                               const std::string& what) {
    throw DataError(path.string() + ": record " + std::to_string(record) + ": " + what);
}

FeatureSet load_binary(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open file");

    char magic[4];
    if (!read_bytes(in, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError(path.string() + ": bad magic, not a feature file");

    std::uint32_t count = 0, dim = 0;
    if (!read_u32le(in, count) || !read_u32le(in, dim))
        throw DataError(path.string() + ": truncated header");
    if (dim == 0) throw DataError(path.string() + ": header declares dimension 0");

    FeatureSet set;
    std::vector<double> values(dim);
    for (std::size_t rec = 1; rec <= count; ++rec) {
        std::uint16_t id_len = 0;
        if (!read_u16le(in, id_len))
            record_error(path, rec, "unexpected end of file");
        if (id_len == 0) record_error(path, rec, "empty item id");
        std::string id(id_len, '\0');
        if (!read_bytes(in, id.data(), id_len))
            record_error(path, rec, "unexpected end of file in id");
        for (std::uint32_t j = 0; j < dim; ++j) {
            float f = 0;
            if (!read_f32le(in, f))
                record_error(path, rec, "unexpected end of file in values");
            if (strict && !std::isfinite(f))
                record_error(path, rec, "non-finite value at component " + std::to_string(j) +
                                            " (id '" + id + "')");
            values[j] = static_cast<double>(f);
        }
        if (set.contains(id)) record_error(path, rec, "duplicate id '" + id + "'");
        set.add(std::move(id), values);
    }
    // Trailing bytes mean the header count was wrong.
    char extra;
    if (in.read(&extra, 1))
        throw DataError(path.string() + ": trailing bytes after last record");
    return set;
}

FeatureSet load_tsv(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");

    FeatureSet set;
    std::string line;
    std::size_t rec = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rec;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        while (true) {
            auto tab = rest.find('\t');
            fields.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (fields.size() < 2) record_error(path, rec, "expected id and at least one value");
        if (fields[0].empty()) record_error(path, rec, "empty item id");
        std::size_t d = fields.size() - 1;
        if (rec == 1) {
            dim = d;
        } else if (d != dim) {
            record_error(path, rec, "dimension mismatch: expected " + std::to_string(dim) +
                                        ", got " + std::to_string(d));
        }
        std::vector<double> values(d);
        for (std::size_t j = 0; j < d; ++j) {
            std::string token(fields[j + 1]);
            char* end = nullptr;
            double parsed = std::strtod(token.c_str(), &end);
            if (end != token.c_str() + token.size() || token.empty())
                record_error(path, rec, "bad numeric value '" + token + "'");
            float f = static_cast<float>(parsed); // disk precision is float32
            if (strict && !std::isfinite(f))
                record_error(path, rec, "non-finite value at component " + std::to_string(j));
            values[j] = static_cast<double>(f);
        }
        std::string id(fields[0]);
        if (set.contains(id)) record_error(path, rec, "duplicate id '" + id + "'");
        set.add(std::move(id), values);
    }
    return set;
}

} // namespace

FileFormat format_from_extension(const std::filesystem::path& path) {
    return path.extension() == ".tsv" ? FileFormat::tsv : FileFormat::binary;
}

void FeatureSet::add(std::string id, std::span<const double> values) {
    if (id.empty()) throw DataError("empty item id");
    if (values.empty()) throw DataError("empty feature vector (id '" + id + "')");
    if (empty()) {
        dim_ = values.size();
    } else if (values.size() != dim_) {
        throw DataError("dimension mismatch for id '" + id + "': set has dim " +
                        std::to_string(dim_) + ", vector has dim " +
                        std::to_string(values.size()));
    }
    if (index_.count(id)) throw DataError("duplicate id '" + id + "'");
    index_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), values.begin(), values.end());
}

bool FeatureSet::contains(std::string_view id) const {
    return index_.find(std::string(id)) != index_.end();
}

std::optional<std::size_t> FeatureSet::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::span<const double> FeatureSet::get(std::string_view id) const {
    auto pos = find(id);
    if (!pos) throw DataError("unknown id '" + std::string(id) + "'");
    return row(*pos);
}

bool FeatureSet::operator==(const FeatureSet& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
}

FeatureSet load_features(const std::filesystem::path& path, FileFormat format, bool strict) {
    return format == FileFormat::binary ? load_binary(path, strict) : load_tsv(path, strict);
}

void save_features(const FeatureSet& set, const std::filesystem::path& path,
                   FileFormat format) {
    if (set.empty()) throw DataError("refusing to save empty set to " + path.string());

    std::ofstream out(path, format == FileFormat::binary
                                ? std::ios::binary | std::ios::trunc
                                : std::ios::trunc);
    if (!out) throw Error(path.string() + ": cannot open for writing");

    if (format == FileFormat::binary) {
        out.write(kMagic, 4);
        write_u32le(out, static_cast<std::uint32_t>(set.size()));
        write_u32le(out, static_cast<std::uint32_t>(set.dim()));
        for (std::size_t i = 0; i < set.size(); ++i) {
            const std::string& id = set.id(i);
            if (id.size() > 0xffff)
                throw DataError("id too long (" + std::to_string(id.size()) + " bytes): '" +
                                id.substr(0, 32) + "...'");
            write_u16le(out, static_cast<std::uint16_t>(id.size()));
            out.write(id.data(), static_cast<std::streamsize>(id.size()));
            for (double v : set.row(i)) write_f32le(out, static_cast<float>(v));
        }
    } else {
        char buf[64];
        for (std::size_t i = 0; i < set.size(); ++i) {
            out << set.id(i);
            for (double v : set.row(i)) {
                std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(static_cast<float>(v)));
                out << '\t' << buf;
            }
            out << '\n';
        }
    }
    out.flush();
    if (!out) throw Error(path.string() + ": write failed");
}

bool ValidationReport::ok() const {
    for (const auto& issue : issues)
        if (issue.severity == ValidationIssue::Severity::error) return false;
    return true;
}

ValidationReport validate(const FeatureSet& set) {
    ValidationReport report;
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto row = set.row(i);
        bool all_zero = true;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!std::isfinite(row[j])) {
                report.issues.push_back({ValidationIssue::Severity::error, set.id(i),
                                         static_cast<std::ptrdiff_t>(j),
                                         "non-finite component"});
                all_zero = false;
            } else if (row[j] != 0.0) {
                all_zero = false;
            }
        }
        if (all_zero)
            report.issues.push_back({ValidationIssue::Severity::warning, set.id(i), -1,
                                     "all-zero vector breaks l2 normalization"});
    }
    return report;
}

} // namespace imret
