#include "core/model_io.hpp"

#include <fstream>

namespace ksmpc::io {

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j) {
  const int r = static_cast<int>(j.size());
  if (r == 0) return Mat(0, 0);
  const int c = static_cast<int>(j[0].size());
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const Json& j) {
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

std::string content_hash(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::Config, "bad json in " + path + ": " + e.what());
  }
  return j;
}

void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot open for write " + path);
  out << j.dump(1) << "\n";
  require(out.good(), ErrorCode::Io, "write failed " + path);
}

void save_model(const std::string& path, const ModelFile& mf) {
  Json j;
  j["format"] = "ksmpc-model";
  j["version"] = 1;
  j["dt"] = mf.dt;
  j["a"] = mat_to_json(mf.model.a);
  j["b"] = mat_to_json(mf.model.b);
  j["b_phi"] = mat_to_json(mf.model.b_phi);
  j["sigma_w"] = mat_to_json(mf.model.sigma_w);
  j["w_bar"] = vec_to_json(mf.model.w_bar);
  j["ridge"] = mf.model.ridge;
  j["m_train"] = mf.model.m_train;
  j["dictionary"] = {{"centers", mat_to_json(mf.model.dict.centers)},
                     {"box_lower", vec_to_json(mf.model.dict.box_lower)},
                     {"box_upper", vec_to_json(mf.model.dict.box_upper)},
                     {"seed", mf.model.dict.seed}};
  j["linear_residuals"] = {{"variance", vec_to_json(mf.linear_residuals.variance4)},
                           {"max_abs", vec_to_json(mf.linear_residuals.max_abs4)}};
  j["fit_report"] = {{"one_step_nrmse", vec_to_json(mf.report.one_step_nrmse)},
                     {"rollout_nrmse", vec_to_json(mf.report.rollout_nrmse)},
                     {"residual_autocorr", vec_to_json(mf.report.residual_autocorr)},
                     {"residual_mean", vec_to_json(mf.report.residual_mean)},
                     {"wbar_exceed_fraction", mf.report.wbar_exceed_fraction},
                     {"rollout_len", mf.report.rollout_len},
                     {"m_val", mf.report.m_val}};
  j["hash"] = "";
  const std::string body = j.dump();
  j["hash"] = content_hash(body);
  save_json(path, j);
}

ModelFile load_model(const std::string& path) {
  const Json j = load_json(path);
  require(j.value("format", "") == "ksmpc-model", ErrorCode::Config,
          path + " is not a model file");
  ModelFile mf;
  mf.dt = j.value("dt", 0.01);
  mf.model.a = mat_from_json(j.at("a"));
  mf.model.b = mat_from_json(j.at("b"));
  mf.model.b_phi = mat_from_json(j.at("b_phi"));
  mf.model.sigma_w = mat_from_json(j.at("sigma_w"));
  mf.model.w_bar = vec_from_json(j.at("w_bar"));
  mf.model.ridge = j.value("ridge", 0.0);
  mf.model.m_train = j.value("m_train", 0);
  const Json& d = j.at("dictionary");
  mf.model.dict.centers = mat_from_json(d.at("centers"));
  mf.model.dict.box_lower = vec_from_json(d.at("box_lower"));
  mf.model.dict.box_upper = vec_from_json(d.at("box_upper"));
  mf.model.dict.seed = d.value("seed", 0ull);
  const int n = mf.model.n_lift();
  mf.model.c = Mat::Zero(kNumStates, n);
  mf.model.c.leftCols(kNumStates).setIdentity();
  mf.model.g = Mat::Identity(n, n);
  if (j.contains("linear_residuals")) {
    mf.linear_residuals.variance4 = vec_from_json(j["linear_residuals"]["variance"]);
    mf.linear_residuals.max_abs4 = vec_from_json(j["linear_residuals"]["max_abs"]);
  }
  if (j.contains("fit_report")) {
    const Json& r = j["fit_report"];
    mf.report.one_step_nrmse = vec_from_json(r.at("one_step_nrmse"));
    mf.report.rollout_nrmse = vec_from_json(r.at("rollout_nrmse"));
    mf.report.residual_autocorr = vec_from_json(r.at("residual_autocorr"));
    mf.report.residual_mean = vec_from_json(r.at("residual_mean"));
    mf.report.wbar_exceed_fraction = r.value("wbar_exceed_fraction", 0.0);
    mf.report.rollout_len = r.value("rollout_len", 0);
    mf.report.m_val = r.value("m_val", 0);
  }
  mf.hash = j.value("hash", "");
  return mf;
}

void save_sets(const std::string& path, const sets::InvariantSets& s,
               const std::string& model_hash) {
  Json j;
  j["format"] = "ksmpc-sets";
  j["version"] = 1;
  j["model_hash"] = model_hash;
  j["t_r"] = mat_to_json(s.t_r);
  j["t_inv_r"] = mat_to_json(s.t_inv_r);
  j["a_red"] = mat_to_json(s.a_red);
  j["b_red"] = mat_to_json(s.b_red);
  j["c_t"] = {{"h", mat_to_json(s.c_t.h_mat)}, {"b", vec_to_json(s.c_t.h_vec)}};
  j["c_inf"] = {{"h", mat_to_json(s.c_inf.h_mat)}, {"b", vec_to_json(s.c_inf.h_vec)}};
  j["first_h"] = mat_to_json(s.first_h);
  j["first_h_eroded"] = vec_to_json(s.first_h_eroded);
  j["w_bar_used"] = vec_to_json(s.w_bar_used);
  j["manifest"] = {{"hankel", vec_to_json(s.hankel)},
                   {"mismatch_bound", s.mismatch_bound},
                   {"iterations", s.iterations},
                   {"gw_erosion_max", s.gw_erosion_max},
                   {"phi_erosion_max", s.phi_erosion_max}};
  j["hash"] = "";
  j["hash"] = content_hash(j.dump());
  save_json(path, j);
}

SetsFile load_sets(const std::string& path) {
  const Json j = load_json(path);
  require(j.value("format", "") == "ksmpc-sets", ErrorCode::Config,
          path + " is not a sets file");
  SetsFile f;
  f.model_hash = j.value("model_hash", "");
  f.hash = j.value("hash", "");
  auto& s = f.sets;
  s.t_r = mat_from_json(j.at("t_r"));
  s.t_inv_r = mat_from_json(j.at("t_inv_r"));
  s.a_red = mat_from_json(j.at("a_red"));
  s.b_red = mat_from_json(j.at("b_red"));
  s.c_t.h_mat = mat_from_json(j.at("c_t").at("h"));
  s.c_t.h_vec = vec_from_json(j.at("c_t").at("b"));
  s.c_inf.h_mat = mat_from_json(j.at("c_inf").at("h"));
  s.c_inf.h_vec = vec_from_json(j.at("c_inf").at("b"));
  s.first_h = mat_from_json(j.at("first_h"));
  s.first_h_eroded = vec_from_json(j.at("first_h_eroded"));
  s.w_bar_used = vec_from_json(j.at("w_bar_used"));
  const Json& m = j.at("manifest");
  s.hankel = vec_from_json(m.at("hankel"));
  s.mismatch_bound = m.value("mismatch_bound", 0.0);
  s.iterations = m.value("iterations", 0);
  s.gw_erosion_max = m.value("gw_erosion_max", 0.0);
  s.phi_erosion_max = m.value("phi_erosion_max", 0.0);
  return f;
}

}  // namespace ksmpc::io
