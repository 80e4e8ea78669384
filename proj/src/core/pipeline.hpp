#pragma once

#include <optional>
#include <string>

#include "core/chance.hpp"
#include "core/episode.hpp"
#include "core/metrics.hpp"
#include "core/model_io.hpp"

namespace ksmpc::pipeline {

using harness::Config;

void save_dataset(const std::string& path, const koopman::Dataset& ds, double dt);
koopman::Dataset load_dataset(const std::string& path);

// subcommand bodies; all throw ksmpc::Error on failure
void cmd_collect(const Config& cfg, const std::string& out_path);
void cmd_fit(const Config& cfg, const std::string& dataset_path,
             const std::string& out_model);
void cmd_sets(const Config& cfg, const std::string& model_path,
              const std::string& out_path, const std::string& projection_csv);
void cmd_simulate(const Config& cfg, const std::string& model_path,
                  const std::string& sets_path, const std::string& controller,
                  const std::string& out_csv, std::optional<uint64_t> seed);
void cmd_compare(const Config& cfg, const std::string& model_path,
                 const std::string& sets_path, const std::string& out_dir);
void cmd_report(const Config& cfg, const std::string& run_dir,
                const std::string& out_dir);
void cmd_validate(const Config& cfg, const std::string& model_path,
                  const std::string& out_json, int trials);
void cmd_track_csv(const Config& cfg, const std::string& out_csv);

// in-memory building blocks shared with the test suites
io::ModelFile fit_model(const Config& cfg, const koopman::Dataset& ds);
sets::InvariantSets build_sets(const Config& cfg, const io::ModelFile& mf);
harness::Artifacts build_artifacts(const Config& cfg, const io::ModelFile& mf,
                                   std::optional<sets::InvariantSets> s);

}  // namespace ksmpc::pipeline
