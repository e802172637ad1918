#pragma once

#include <string>
#include <vector>

namespace nonsmooth {

/// One worked example: what is computed, what is expected, what came out.
struct GalleryEntry {
  std::string name;
  std::string expected;
  std::string observed;
  bool pass = false;
  std::string note;
};

/// The twelve worked examples, each checked against its known sets or
/// values (interval endpoints to 1e-9).
std::vector<GalleryEntry> run_gallery();

}  // namespace nonsmooth
