#include "eurocurate/io.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace eurocurate {

AtomicFile::AtomicFile(std::filesystem::path target, bool binary) : target_(std::move(target)) {
    if (target_.has_parent_path()) std::filesystem::create_directories(target_.parent_path());
    temp_ = target_;
    temp_ += ".tmp." + std::to_string(::getpid());
    out_.open(temp_, binary ? std::ios::binary | std::ios::out | std::ios::trunc : std::ios::out | std::ios::trunc);
    if (!out_) throw ConfigError("cannot write " + temp_.string());
}

AtomicFile::~AtomicFile() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(temp_, ec);
    }
}

void AtomicFile::commit() {
    out_.flush();
    if (!out_) throw Error("write failed for " + target_.string());
    out_.close();
    std::filesystem::rename(temp_, target_);
    committed_ = true;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    AtomicFile f(path, true);
    f.stream().write(content.data(), static_cast<std::streamsize>(content.size()));
    f.commit();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(line, n);
    }
}

JsonlSource::JsonlSource(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw ConfigError("cannot read " + path.string());
}

std::optional<Document> JsonlSource::next() {
    while (std::getline(in_, line_)) {
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (!line_.empty()) return parse_record(line_);
    }
    return std::nullopt;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto run = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(workers, n); ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace eurocurate
