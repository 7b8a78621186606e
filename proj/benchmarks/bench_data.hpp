#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

inline std::string bench_read(const std::filesystem::path& relative) {
    std::ifstream in(std::filesystem::path(BROCCOLI_BENCH_DATA_DIR) / relative, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline const std::string& bench_book() {
    static const std::string text = bench_read("books/pg10007_carmilla.txt");
    return text;
}
