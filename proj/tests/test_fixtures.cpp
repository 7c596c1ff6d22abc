#include "igtk/fixtures.hpp"
#include "test_util.hpp"

using namespace igtk;

TEST_CASE("bundled fixtures all verify") {
  const auto checks = verify_fixtures(IGTK_FIXTURE_DIR);
  CHECK(checks.size() > 20);
  for (const auto& c : checks) {
    INFO(c.fixture << ": " << c.name << " " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("missing fixture directory is an integrity error") {
  TempDir dir("nofixtures");
  REQUIRE_ERROR_KIND(verify_fixtures(dir.path()), ErrorKind::integrity);
}
