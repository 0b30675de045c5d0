#pragma once

// Shared helpers for the test binaries: scratch directories, CLI invocation,
// deterministic random data generation.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "imret/feature_store.hpp"

extern std::string g_cli_path; // set by main from --cli <path>

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<unsigned> counter{0};
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("imret_test_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(counter.fetch_add(1)));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        std::perror("TempDir");
        std::abort();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string shell_quote(const std::string& s) {
    std::string quoted = "'";
    for (char c : s) {
        if (c == '\'')
            quoted += "'\\''";
        else
            quoted += c;
    }
    quoted += "'";
    return quoted;
}

// Runs the engine binary with the given arguments, capturing exit code and
// both output streams via temp files (portable enough for POSIX sh).
inline CliResult run_cli(const std::vector<std::string>& args, const TempDir& dir) {
    std::string cmd = shell_quote(g_cli_path);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    std::string out_path = dir.file("__stdout"), err_path = dir.file("__stderr");
    cmd += " > " + shell_quote(out_path) + " 2> " + shell_quote(err_path);

    int status = std::system(cmd.c_str());
    CliResult result;
    if (status >= 0 && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    result.out = read_file(out_path);
    result.err = read_file(err_path);
    return result;
}

// Deterministic random feature sets. Values pass through float so binary
// round-trips are exact.
inline imret::FeatureSet random_feature_set(std::mt19937_64& rng, std::size_t n,
                                            std::size_t dim, double lo = -1.0,
                                            double hi = 1.0,
                                            const std::string& prefix = "item") {
    std::uniform_real_distribution<double> dist(lo, hi);
    imret::FeatureSet set;
    for (std::size_t i = 0; i < n; ++i) {
        imret::FeatureVector v(dim);
        for (auto& x : v) x = static_cast<double>(static_cast<float>(dist(rng)));
        set.add(prefix + std::to_string(i), v);
    }
    return set;
}

inline imret::FeatureVector random_vector(std::mt19937_64& rng, std::size_t dim,
                                          double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    imret::FeatureVector v(dim);
    for (auto& x : v) x = dist(rng);
    return v;
}

inline double l2_distance(const imret::FeatureVector& a, const imret::FeatureVector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}
