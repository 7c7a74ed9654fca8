#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

#include "eurocurate/mixer_packer.hpp"

namespace eurocurate {

/// Writes to a sibling temp file; commit() renames it over the target.
/// Destroying an uncommitted file removes the temp file, so a failed stage
/// never leaves a partial output behind.
class AtomicFile {
public:
    explicit AtomicFile(std::filesystem::path target, bool binary = false);
    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;
    ~AtomicFile();

    std::ofstream& stream() { return out_; }
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path temp_;
    std::ofstream out_;
    bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Calls fn(line, 1-based line number) for every non-empty line.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

/// Lazily parses Document lines; malformed lines throw.
class JsonlSource final : public RecordSource {
public:
    explicit JsonlSource(const std::filesystem::path& path);
    std::optional<Document> next() override;

private:
    std::ifstream in_;
    std::string line_;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace eurocurate
