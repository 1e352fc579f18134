#pragma once

#include "biadapt/error.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#define CHECK_THROWS_KIND(expr, expected_kind)                                                               \
    do {                                                                                                     \
        bool thrown_ = false;                                                                                \
        try {                                                                                                \
            (void)(expr);                                                                                    \
        } catch (const biadapt::Error& e_) {                                                                 \
            thrown_ = true;                                                                                  \
            CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());                                          \
        }                                                                                                    \
        CHECK_MESSAGE(thrown_, "expected " << biadapt::error_name(expected_kind));                            \
    } while (0)

namespace testing {

inline std::filesystem::path data_dir() { return BIADAPT_TEST_DATA_DIR; }

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("biadapt_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

} // namespace testing
