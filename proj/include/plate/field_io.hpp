#pragma once

// Flat little-endian float64 dumps (row-major, axis 0 slowest) with a JSON side
// header {dim, half_length, points_per_axis, ...}.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "plate/spectral_grid.hpp"

namespace plate {

inline nlohmann::json grid_to_json(const GridSpec& g) {
    return {{"dim", g.dim()}, {"half_length", g.half_length()}, {"points_per_axis", g.points_per_axis()}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
    try {
        return GridSpec(j.at("dim").get<int>(), j.at("half_length").get<double>(),
                        j.at("points_per_axis").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("bad grid header: ") + e.what());
    }
}

/// Writes `stem`.bin and `stem`.json. Extra header entries are merged in.
inline void write_field(const std::filesystem::path& stem, const PhysicalField& f,
                        const nlohmann::json& extra = nlohmann::json::object()) {
    auto bin = stem;
    bin += ".bin";
    auto hdr = stem;
    hdr += ".json";
    {
        std::ofstream out(bin, std::ios::binary);
        if (!out) throw InvalidInput("cannot open " + bin.string());
        out.write(reinterpret_cast<const char*>(f.values.data()),
                  static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    }
    nlohmann::json h = grid_to_json(f.grid);
    h["dtype"] = "float64";
    h["order"] = "row-major";
    for (auto& [k, v] : extra.items()) h[k] = v;
    std::ofstream out(hdr);
    out << h.dump(2) << "\n";
}

/// Reads a dump given either stem, stem.bin or stem.json.
inline PhysicalField read_field(std::filesystem::path path) {
    if (path.extension() == ".bin" || path.extension() == ".json") path.replace_extension();
    auto bin = path;
    bin += ".bin";
    auto hdr = path;
    hdr += ".json";
    std::ifstream hin(hdr);
    if (!hin) throw InvalidInput("cannot open field header " + hdr.string());
    nlohmann::json h;
    try {
        hin >> h;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("malformed field header " + hdr.string() + ": " + e.what());
    }
    GridSpec g = grid_from_json(h);
    std::ifstream in(bin, std::ios::binary | std::ios::ate);
    if (!in) throw InvalidInput("cannot open field data " + bin.string());
    auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != g.size() * sizeof(double))
        throw InvalidInput("field data size " + std::to_string(bytes) + " does not match header grid");
    in.seekg(0);
    std::vector<double> v(g.size());
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
    return PhysicalField(g, std::move(v));
}

}  // namespace plate
