#pragma once

#include <string>

#include "stylegest/motion/types.hpp"

namespace stylegest::motion {

// Binary motion record, little-endian, fields in this exact order:
//   magic   "SGMO"        4 bytes
//   version u32           (currently 1)
//   fps     f64
//   J       u32
//   K       u32
//   pad     u32           trailing repeated-pose frames
//   data    f64 x K*(3+6J) row-major poses
void save_motion(const Motion& m, const std::string& path);
Motion load_motion(const std::string& path);

// Viewer-friendly exports.
void export_motion_csv(const Motion& m, const std::string& path);
void export_motion_json(const Motion& m, const std::string& path);

// Corpus on disk: <dir>/corpus.json plus one .sgm motion file per item.
void save_corpus(const SyntheticCorpus& corpus, const std::string& dir);
SyntheticCorpus load_corpus(const std::string& dir);

}  // namespace stylegest::motion
