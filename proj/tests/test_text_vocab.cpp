#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "halo/rng.hpp"
#include "halo/text.hpp"
#include "halo/vocabulary.hpp"
#include "support.hpp"

using namespace halo;

TEST_CASE("sha256 matches published test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256_file hashes file bytes") {
  testing::TempDir dir;
  text::write_file(dir / "f.txt", "abc");
  CHECK(sha256_file(dir / "f.txt") == sha256_hex("abc"));
  CHECK_THROWS_AS(sha256_file(dir / "missing"), IoError);
}

TEST_CASE("words splits on every non-alphanumeric character") {
  CHECK(text::words("Two DOGS, one-cat!") == std::vector<std::string>{"two", "dogs", "one", "cat"});
  CHECK(text::words("  ").empty());
}

TEST_CASE("first_alpha_token skips leading punctuation and digits") {
  CHECK(text::first_alpha_token("  ...Yes.") == "yes");
  CHECK(text::first_alpha_token("1) no way") == "no");
  CHECK(text::first_alpha_token("42") == "");
}

TEST_CASE("pluralize") {
  CHECK(text::pluralize("cat") == "cats");
  CHECK(text::pluralize("bus") == "buses");
  CHECK(text::pluralize("bench") == "benches");
  CHECK(text::pluralize("toothbrush") == "toothbrushes");
  CHECK(text::pluralize("person") == "people");
  CHECK(text::pluralize("knife") == "knives");
  CHECK(text::pluralize("sheep") == "sheep");
  CHECK(text::pluralize("puppy") == "puppies");
  CHECK(text::pluralize("toy") == "toys");
}

TEST_CASE("mentions is word-bounded, case-insensitive and plural-aware") {
  CHECK(text::mentions("two cats on a sofa", "cat"));
  CHECK_FALSE(text::mentions("a cathedral", "cat"));
  CHECK(text::mentions("books piled up", "book"));
  CHECK(text::mentions("Two DINING TABLES", "dining table"));
  CHECK_FALSE(text::mentions("a dining area with a table", "dining table"));
  CHECK(text::mentions("several people", "person"));
}

TEST_CASE("numbered_list and substitute") {
  CHECK(text::numbered_list({"a", "b"}) == "1. a\n2. b");
  CHECK(text::numbered_list({}) == "");
  CHECK(text::substitute("x {k} y {k}", "k", "v") == "x v y v");
  CHECK(text::substitute("{other}", "k", "v") == "{other}");
}

TEST_CASE("fixed rendering") {
  CHECK(text::fixed(19.4, 1) == "19.4");
  CHECK(text::fixed(2.0, 3) == "2.000");
}

TEST_CASE("write_file creates parents and round-trips bytes") {
  testing::TempDir dir;
  const auto p = dir / "a/b/c.txt";
  text::write_file(p, std::string("x\0y\n", 4));
  CHECK(text::read_file(p) == std::string("x\0y\n", 4));
  CHECK_THROWS_AS(text::read_file(dir / "nope"), IoError);
}

TEST_CASE("split keeps empty fields") {
  CHECK(text::split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("coco vocabulary holds the 80 categories") {
  const auto& v = ObjectVocabulary::coco();
  CHECK(v.terms().size() == 80);
}

TEST_CASE("find_terms takes the longest form and reports first occurrences") {
  const auto& v = ObjectVocabulary::coco();
  CHECK(v.find_terms("A Teddy Bear next to a bear and two bears") ==
        std::vector<std::string>{"teddy bear", "bear"});
  CHECK(v.find_terms("hot dogs and a dog") == std::vector<std::string>{"hot dog", "dog"});
  CHECK(v.find_terms("a cathedral at dusk").empty());
  CHECK(v.find_terms("three mice near a keyboard") ==
        std::vector<std::string>{"mouse", "keyboard"});
}

TEST_CASE("from_terms uses regular plurals") {
  const auto v = ObjectVocabulary::from_terms({"widget", "box"});
  CHECK(v.find_terms("boxes of widgets") == std::vector<std::string>{"box", "widget"});
}

TEST_CASE("SeededRng::below stays in range and is reproducible") {
  SeededRng a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.below(7);
    CHECK(x < 7);
    CHECK(x == b.below(7));
  }
}
