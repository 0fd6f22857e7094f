#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "halo/endpoint.hpp"
#include "halo/trainer_bridge.hpp"

namespace halo::cli {

struct EndpointSpec {
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string api_key_env;
  int timeout_seconds = 120;
  std::string image_url_prefix;
  Prices prices;
};

void to_json(nlohmann::json& j, const EndpointSpec& e);
void from_json(const nlohmann::json& j, EndpointSpec& e);

/// Every parameter a command may consume. Loaded from --config, then
/// overridden by explicit flags; the merged value is what the manifest
/// records and what the run id digests.
struct RunConfig {
  std::vector<std::string> captions;  // COCO caption files; empty: synthetic images
  std::string split_file;
  std::string split = "test";
  std::size_t synthetic = 200;
  std::size_t images = 0;  // 0: every record
  std::uint64_t seed = 0;

  std::string endpoint = "stub";
  std::string model = "stub-model";
  std::string judge = "oracle";
  std::string judge_model = "judge";
  std::string transcript;
  double planted_rate = 0.25;
  SamplingConfig sampling;

  std::size_t n_each = 10000;
  std::vector<std::string> prompts{"P1", "P2", "P3", "P4"};
  std::string axis;
  std::vector<double> values;
  std::vector<std::string> items;
  std::string describe_prompt = "Describe this image.";

  std::string input;
  std::string layout;
  std::string output;
  std::string norm = "l1";
  std::string label = "all";

  FinetuneConfig finetune;
  std::string finetune_command;
  std::map<std::string, EndpointSpec> endpoints;
  unsigned workers = 4;
};

/// Unknown keys throw ConfigError.
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Executes one command. Returns 0 on success, 1 on a domain error and 2 on
/// a usage error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace halo::cli
