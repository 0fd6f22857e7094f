#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "halo/error.hpp"
#include "halo/reference_tables.hpp"
#include "halo/synthetic.hpp"
#include "halo/text.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Writes offline demo inputs for halo-eval", "halo-fixtures"};
  app.require_subcommand(1);
  std::string out_dir = ".";
  app.add_option("--out", out_dir, "output directory");

  auto* coco = app.add_subcommand("coco", "synthetic COCO captions and a split file");
  std::size_t n = 200;
  std::string split = "test";
  coco->add_option("--n", n, "images");
  coco->add_option("--split", split, "split assigned to every image");

  auto* pope = app.add_subcommand("pope", "probe transcript reproducing published counts");
  std::string model = "mPLUG-Owl";
  pope->add_option("--model", model, "LLaVA, MiniGPT-4 or mPLUG-Owl");

  auto* grads = app.add_subcommand("grads", "a small gradient matrix for attrib");
  app.fallthrough();

  CLI11_PARSE(app, argc, argv);
  try {
    const fs::path dir(out_dir);
    if (coco->parsed()) {
      const auto recs = halo::synthetic::records(n);
      halo::synthetic::write_coco_captions(recs, dir / "captions.json");
      halo::synthetic::write_split(recs, halo::parse_split(split), dir / "split.json");
    } else if (pope->parsed()) {
      const halo::reference::ProbeCounts* counts = nullptr;
      for (const auto& c : halo::reference::probe_counts()) {
        if (c.model == model) counts = &c;
      }
      if (!counts) throw halo::ArgumentError("no published probe counts for '" + model + "'");
      const auto fx = halo::synthetic::probe_fixture(*counts);
      halo::synthetic::write_coco_captions(fx.records, dir / "captions.json");
      halo::synthetic::write_split(fx.records, halo::Split::test, dir / "split.json");
      halo::synthetic::write_transcript(fx.transcript, dir / "transcript.jsonl");
    } else if (grads->parsed()) {
      const nlohmann::json g{
          {"rows", {"Yes", ",", " there", " is"}},
          {"cols", {"<Img:0>", "<Img:1>", "Is", " there", " a", " cat", "?"}},
          {"values",
           {{0.9, 0.7, 0.1, 0.05, 0.02, 0.6, 0.01},
            {0.2, 0.1, 0.3, 0.1, 0.0, 0.2, 0.4},
            {0.1, 0.3, 0.05, 0.7, 0.1, 0.2, 0.0},
            {0.4, 0.2, 0.1, 0.3, 0.2, 0.1, 0.1}}}};
      halo::text::write_file(dir / "grads" / "demo.json", g.dump(2) + "\n");
    }
  } catch (const halo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
