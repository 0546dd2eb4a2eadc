#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fxbem {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Static-chunked parallel loop; results must be written to disjoint slots.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += nt) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// FNV-1a, used for mesh/tree fingerprints in the binary containers.
struct Fnv1a {
    std::uint64_t state = 1469598103934665603ull;

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state ^= p[i];
            state *= 1099511628211ull;
        }
    }
    template <class T>
    void update_pod(const T& v) {
        update(&v, sizeof(T));
    }
    std::uint64_t digest() const { return state; }
};

namespace io {

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void write_array(std::ostream& out, const T* data, std::size_t n) {
    out.write(reinterpret_cast<const char*>(data), sizeof(T) * n);
}

template <class T>
T read_pod(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated container");
    return v;
}

template <class T>
void read_array(std::istream& in, T* data, std::size_t n) {
    in.read(reinterpret_cast<char*>(data), sizeof(T) * n);
    if (!in) throw IoError("truncated container");
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw IoError(std::string("bad container magic, expected ") + magic);
}

} // namespace io
} // namespace fxbem
