#pragma once

#include <string>

#include <json.hpp>

#include "core/controllers.hpp"
#include "core/koopman.hpp"
#include "core/sets.hpp"

namespace ksmpc::io {

using Json = nlohmann::json;

Json mat_to_json(const Mat& m);
Mat mat_from_json(const Json& j);
Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);

// content hash for manifests (FNV-1a over the serialized form)
std::string content_hash(const std::string& s);

struct ModelFile {
  koopman::KoopmanModel model;
  ctrl::LinearResidualStats linear_residuals;  // for the L-SMPC baseline
  koopman::FitReport report;
  double dt = 0.01;
  std::string hash;
};

void save_model(const std::string& path, const ModelFile& mf);
ModelFile load_model(const std::string& path);

void save_sets(const std::string& path, const sets::InvariantSets& s,
               const std::string& model_hash);
struct SetsFile {
  sets::InvariantSets sets;
  std::string model_hash;
  std::string hash;
};
SetsFile load_sets(const std::string& path);

Json load_json(const std::string& path);
void save_json(const std::string& path, const Json& j);

}  // namespace ksmpc::io
