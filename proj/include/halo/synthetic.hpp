#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "halo/corpus.hpp"
#include "halo/reference_tables.hpp"

/// Synthetic captioned images and recorded LVLM transcripts, for demos and
/// offline pipeline runs.
namespace halo::synthetic {

/// `n` images with ids 1..n and five captions each. Captions name two
/// objects drawn from a fixed pool that never overlaps the objects the
/// planted and lexical stubs inject.
std::vector<ImageRecord> records(std::size_t n, std::uint64_t seed = 0);

struct TranscriptEntry {
  ImageId image_id = 0;
  std::string prompt;
  std::string response;
};

struct ProbeFixture {
  std::vector<ImageRecord> records;
  std::vector<TranscriptEntry> transcript;
};

/// Images and a probe transcript whose tally reproduces `counts`. Item i is
/// present in the first (n - qh_i) images; among the remaining images the
/// first ay_i answers are yes and the first ch_i of those descriptions
/// mention the item.
ProbeFixture probe_fixture(const reference::ProbeCounts& counts, std::size_t n_images = 100,
                           const std::string& describe_prompt = "Describe this image.");

/// COCO captions file: {images: [{id, file_name}], annotations: [{id, image_id, caption}]}.
void write_coco_captions(std::span<const ImageRecord> records, const std::filesystem::path& path);

/// Karpathy-style split file; every record goes to `split`.
void write_split(std::span<const ImageRecord> records, Split split,
                 const std::filesystem::path& path);

void write_transcript(std::span<const TranscriptEntry> entries, const std::filesystem::path& path);

}  // namespace halo::synthetic
