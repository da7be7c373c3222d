#pragma once

#include <string>

#include "pnorm/instance_gen.hpp"

namespace pnorm {

// Instance files are JSON with a "kind" discriminator:
//   flow:    {"kind","p","graph","gradient","r2","sp","demands"}
//   voltage: {"kind","p","graph","w2","sp","demands"}
//   matrix:  {"kind","p","a","m","n","b","c"}
// Graphs are {"n", "edges": [[tail, head], ...]}, matrices are coordinate
// triplets {"rows", "cols", "entries": [[i, j, value], ...]}, vectors plain
// arrays. Keys serialize in sorted order, so identical data gives identical
// bytes. Malformed content throws InvalidInputError.
std::string instance_to_json_text(const GeneratedInstance& inst);
GeneratedInstance instance_from_json_text(const std::string& text);

void save_instance(const GeneratedInstance& inst, const std::string& path);
GeneratedInstance load_instance(const std::string& path);

}  // namespace pnorm
