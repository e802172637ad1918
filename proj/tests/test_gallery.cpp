#include <doctest.h>

#include "nonsmooth/gallery.hpp"

using namespace nonsmooth;

TEST_CASE("every worked example passes") {
  const std::vector<GalleryEntry> entries = run_gallery();
  REQUIRE(entries.size() == 12);
  for (const auto& e : entries) {
    INFO(e.name << "\n  expected: " << e.expected << "\n  observed: " << e.observed);
    CHECK(e.pass);
    CHECK_FALSE(e.expected.empty());
  }
}
