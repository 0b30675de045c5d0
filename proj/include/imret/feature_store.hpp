#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "imret/error.hpp"

namespace imret {

/// Dense descriptor. Dimension is the vector length; components are
/// unitless reals held at working precision (double). On disk they are
/// 32-bit floats.
using FeatureVector = std::vector<double>;

enum class FileFormat { binary, tsv };

/// Picks the format from the file extension: ".tsv" means tsv, anything
/// else the binary format.
FileFormat format_from_extension(const std::filesystem::path& path);

/// Immutable-after-build collection of feature vectors keyed by string id.
/// Iteration order is insertion order. Rows are stored contiguously.
class FeatureSet {
public:
    FeatureSet() = default;

    /// Appends a vector. Throws DataError on empty id, duplicate id, or
    /// dimension mismatch with previously added rows.
    void add(std::string id, std::span<const double> values);
    void add(std::string id, std::initializer_list<double> values) {
        add(std::move(id), std::span<const double>(values.begin(), values.size()));
    }

    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }

    /// Shared dimension; 0 while the set is empty.
    std::size_t dim() const { return dim_; }

    const std::string& id(std::size_t i) const { return ids_[i]; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }

    bool contains(std::string_view id) const;
    std::optional<std::size_t> find(std::string_view id) const;

    /// Row for the given id; throws DataError when the id is unknown.
    std::span<const double> get(std::string_view id) const;

    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const FeatureSet& other) const;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<double> data_; // size() * dim_, row-major
    std::unordered_map<std::string, std::size_t> index_;
};

/// Reads a feature file. With strict=true (the default) non-finite
/// components are rejected with the offending record index; strict=false
/// admits them so that validate() can report on the loaded set.
FeatureSet load_features(const std::filesystem::path& path, FileFormat format,
                         bool strict = true);

/// Writes a feature file parseable by load_features. Throws DataError on
/// an empty set and Error on I/O failure. Binary files round-trip
/// byte-exactly.
void save_features(const FeatureSet& set, const std::filesystem::path& path,
                   FileFormat format);

struct ValidationIssue {
    enum class Severity { error, warning };
    Severity severity;
    std::string item_id;
    std::ptrdiff_t component; // -1 when the issue concerns the whole vector
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    /// True when no invariant is violated (warnings allowed).
    bool ok() const;
    /// True when the report is empty.
    bool clean() const { return issues.empty(); }
};

/// Audits a set: non-finite components are errors, all-zero vectors are
/// warnings (they cannot be l2-normalized downstream).
ValidationReport validate(const FeatureSet& set);

} // namespace imret
