#pragma once

/* Serialization: the versioned contact-spec JSON schema, surface/field and
 * synthesis-problem specs, raw wrench CSV, sweep CSV, and the grasp report
 * emitted by the command-line tool.  JSON numbers are written in shortest
 * exact form (they parse back to the identical double); CSV floats use 17
 * significant digits for the same reason. */

#include <wrenchlab/metrics.hpp>
#include <wrenchlab/oracle.hpp>
#include <wrenchlab/surfaces.hpp>
#include <wrenchlab/synth.hpp>

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace wrenchlab {

using Json = nlohmann::json;

inline constexpr int schema_version = 1;

/* ---- small helpers ---- */

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

namespace iodetail {

inline Vec3 vec3_of(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw Error(std::string(what) + " must be an array of 3 numbers");
  for (const auto& v : j)
    if (!v.is_number()) throw Error(std::string(what) + " must be numeric");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Json json_of(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline double number_at(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw Error(std::string("missing or non-numeric field: ") + key);
  return j[key].get<double>();
}

inline void check_schema(const Json& j) {
  if (!j.is_object()) throw Error("input must be a JSON object");
  if (!j.contains("schema") || !j["schema"].is_number_integer() ||
      j["schema"].get<int>() != schema_version)
    throw Error("unsupported or missing schema version (expected 1)");
}

} // namespace iodetail

/* ---- surfaces and fields ---- */

inline std::shared_ptr<ImplicitSurface> surface_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw Error("surface spec needs a string 'kind'");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "sphere")
    return std::make_shared<Sphere>(iodetail::number_at(j, "radius"));
  if (kind == "plane")
    return std::make_shared<Plane>(iodetail::vec3_of(j.value("normal", Json()), "normal"),
                                   iodetail::number_at(j, "offset"));
  if (kind == "quadric") {
    if (!j.contains("A") || !j["A"].is_array() || j["A"].size() != 3)
      throw Error("quadric spec needs a 3x3 'A'");
    Mat3 A;
    for (int r = 0; r < 3; ++r) {
      const Json& row = j["A"][static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != 3)
        throw Error("quadric spec needs a 3x3 'A'");
      for (int c = 0; c < 3; ++c) A(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    Vec3 b = iodetail::vec3_of(j.value("b", Json::array({0, 0, 0})), "b");
    double c = iodetail::number_at(j, "c");
    double hint = j.contains("radius_hint") ? iodetail::number_at(j, "radius_hint") : 1.0;
    return std::make_shared<Quadric>(A, b, c, hint);
  }
  throw Error("unknown surface kind: " + kind);
}

inline UncertaintyField field_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw Error("field spec needs a string 'kind'");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "constant")
    return constant_field(iodetail::number_at(j, "sigma1_sq"),
                          iodetail::number_at(j, "sigma2_sq"));
  if (kind == "polar") return polar_field();
  if (kind == "harmonic") return harmonic_field(iodetail::number_at(j, "radius"));
  if (kind == "curvature")
    return curvature_field(iodetail::number_at(j, "k_curv"),
                           iodetail::number_at(j, "h"));
  throw Error("unknown field kind: " + kind);
}

/* ---- contact-spec documents ---- */

struct GraspInput {
  std::vector<ContactSpec> contacts;
  FrictionModel model{0.5, 4};
  std::shared_ptr<ImplicitSurface> surface; // optional
  std::optional<UncertaintyField> field;    // optional
};

/* Contact-spec JSON:
 *   {"schema": 1,
 *    "friction": {"mu": .., "n_sides": ..},
 *    "surface": {...}?, "field": {...}?,
 *    "contacts": [{"x": [..], "n_bar": [..]?, "t1": [..]?, "t2": [..]?,
 *                  "sigma1_sq": ..?, "sigma2_sq": ..?}, ...]}
 * A contact without "n_bar" takes its frame and variances from the surface
 * and field; with "n_bar" but no "t1"/"t2" the deterministic tangent
 * completion applies. */
inline GraspInput grasp_input_from_json(const Json& j) {
  iodetail::check_schema(j);
  GraspInput in;
  if (!j.contains("friction") || !j["friction"].is_object())
    throw Error("missing 'friction' object");
  in.model.mu = iodetail::number_at(j["friction"], "mu");
  in.model.n_sides =
      static_cast<int>(iodetail::number_at(j["friction"], "n_sides"));
  in.model.validate();

  if (j.contains("surface")) in.surface = surface_from_json(j["surface"]);
  if (j.contains("field")) in.field = field_from_json(j["field"]);

  if (!j.contains("contacts") || !j["contacts"].is_array() ||
      j["contacts"].empty())
    throw Error("missing or empty 'contacts' array");
  for (const Json& cj : j["contacts"]) {
    if (!cj.is_object() || !cj.contains("x"))
      throw Error("each contact needs an 'x'");
    Vec3 x = iodetail::vec3_of(cj["x"], "x");
    if (!cj.contains("n_bar")) {
      if (!in.surface)
        throw Error("contact without 'n_bar' needs a surface to derive it");
      UncertaintyField f = in.field ? *in.field : constant_field(1e-3, 1e-3);
      in.contacts.push_back(contact_at(*in.surface, f, x));
      continue;
    }
    double s1 = cj.contains("sigma1_sq") ? iodetail::number_at(cj, "sigma1_sq") : 1e-3;
    double s2 = cj.contains("sigma2_sq") ? iodetail::number_at(cj, "sigma2_sq") : 1e-3;
    if (cj.contains("t1") != cj.contains("t2"))
      throw Error("give both 't1' and 't2' or neither");
    if (cj.contains("t1")) {
      ContactSpec c;
      c.x = x;
      c.n_bar = iodetail::vec3_of(cj["n_bar"], "n_bar");
      c.t1 = iodetail::vec3_of(cj["t1"], "t1");
      c.t2 = iodetail::vec3_of(cj["t2"], "t2");
      c.sigma1_sq = s1;
      c.sigma2_sq = s2;
      c.validate();
      in.contacts.push_back(c);
    } else {
      in.contacts.push_back(ContactSpec::from_normal(
          x, iodetail::vec3_of(cj["n_bar"], "n_bar"), s1, s2));
    }
  }
  return in;
}

/* Canonical JSON for one contact set: full frames and variances, fixed key
 * order (alphabetical), shortest-exact numbers.  This is the fingerprint
 * domain. */
inline Json contacts_to_json(const std::vector<ContactSpec>& contacts,
                             const FrictionModel& model) {
  Json doc;
  doc["schema"] = schema_version;
  doc["friction"] = Json{{"mu", model.mu}, {"n_sides", model.n_sides}};
  Json arr = Json::array();
  for (const auto& c : contacts) {
    Json cj;
    cj["x"] = iodetail::json_of(c.x);
    cj["n_bar"] = iodetail::json_of(c.n_bar);
    cj["t1"] = iodetail::json_of(c.t1);
    cj["t2"] = iodetail::json_of(c.t2);
    cj["sigma1_sq"] = c.sigma1_sq;
    cj["sigma2_sq"] = c.sigma2_sq;
    arr.push_back(cj);
  }
  doc["contacts"] = arr;
  return doc;
}

inline std::string grasp_fingerprint(const std::vector<ContactSpec>& contacts,
                                     const FrictionModel& model) {
  return fnv1a_hex(contacts_to_json(contacts, model).dump());
}

/* ---- synthesis problem documents ---- */

struct ProblemSpec {
  std::shared_ptr<ImplicitSurface> surface; // owns what problem points at
  SynthProblem problem;
};

/* Problem JSON: {"schema": 1, "surface": {...}, "field": {...},
 *   "friction": {..}?, "n_f": ..?, "objective": "l_fc"|"min_weight"?,
 *   "separation": ..?, "k_l": ..?, "n_dirs": ..?, "quad_nodes": ..?}. */
inline ProblemSpec problem_from_json(const Json& j) {
  iodetail::check_schema(j);
  if (!j.contains("surface")) throw Error("problem needs a 'surface'");
  if (!j.contains("field")) throw Error("problem needs a 'field'");
  ProblemSpec spec;
  spec.surface = surface_from_json(j["surface"]);
  spec.problem.surface = spec.surface.get();
  spec.problem.field = field_from_json(j["field"]);
  if (j.contains("friction")) {
    spec.problem.model.mu = iodetail::number_at(j["friction"], "mu");
    spec.problem.model.n_sides =
        static_cast<int>(iodetail::number_at(j["friction"], "n_sides"));
  }
  if (j.contains("n_f"))
    spec.problem.n_f = static_cast<int>(iodetail::number_at(j, "n_f"));
  if (j.contains("objective")) {
    std::string obj = j["objective"].get<std::string>();
    if (obj == "l_fc")
      spec.problem.objective = SynthProblem::Objective::Lfc;
    else if (obj == "min_weight")
      spec.problem.objective = SynthProblem::Objective::MinWeight;
    else
      throw Error("unknown objective: " + obj);
  }
  if (j.contains("separation"))
    spec.problem.separation = iodetail::number_at(j, "separation");
  if (j.contains("k_l")) spec.problem.k_l = iodetail::number_at(j, "k_l");
  if (j.contains("n_dirs"))
    spec.problem.pong.n_dirs = static_cast<int>(iodetail::number_at(j, "n_dirs"));
  if (j.contains("quad_nodes"))
    spec.problem.pong.quad_nodes =
        static_cast<int>(iodetail::number_at(j, "quad_nodes"));
  spec.problem.validate();
  return spec;
}

/* ---- wrench CSV ---- */

inline constexpr const char* wrench_csv_header = "fx,fy,fz,tx,ty,tz";

inline std::string wrenches_to_csv(const MatX& W) {
  if (W.rows() != 6) throw Error("wrench matrix must have 6 rows");
  std::ostringstream out;
  out << wrench_csv_header << "\n";
  for (int j = 0; j < W.cols(); ++j) {
    for (int r = 0; r < 6; ++r) {
      if (r) out << ",";
      out << format_g17(W(r, j));
    }
    out << "\n";
  }
  return out.str();
}

inline MatX wrenches_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty wrench CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != wrench_csv_header)
    throw Error(std::string("wrench CSV must start with header '") +
                wrench_csv_header + "'");
  std::vector<Vec6> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    Vec6 w;
    std::string cell;
    for (int r = 0; r < 6; ++r) {
      if (!std::getline(ls, cell, ','))
        throw Error("wrench CSV line " + std::to_string(lineno) +
                    ": expected 6 fields");
      try {
        std::size_t used = 0;
        w[r] = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error("wrench CSV line " + std::to_string(lineno) +
                    ": bad number '" + cell + "'");
      }
    }
    if (std::getline(ls, cell, ','))
      throw Error("wrench CSV line " + std::to_string(lineno) +
                  ": expected 6 fields");
    rows.push_back(w);
  }
  if (rows.empty()) throw Error("wrench CSV has no data rows");
  MatX W(6, static_cast<int>(rows.size()));
  for (int j = 0; j < W.cols(); ++j) W.col(j) = rows[static_cast<std::size_t>(j)];
  return W;
}

/* ---- grasp reports ---- */

struct GraspReport {
  std::string fingerprint;
  GraspMetrics metrics;
  std::optional<double> l_fc;
  std::optional<McEstimate> mc;
};

inline Json grasp_report_to_json(const GraspReport& r) {
  Json j;
  j["schema"] = schema_version;
  j["fingerprint"] = r.fingerprint;
  j["force_closure"] = r.metrics.force_closure;
  if (r.metrics.l_star) j["l_star"] = *r.metrics.l_star;
  if (r.metrics.l_star_normalized)
    j["l_star_normalized"] = *r.metrics.l_star_normalized;
  if (r.metrics.epsilon) j["epsilon"] = *r.metrics.epsilon;
  if (r.metrics.delta) j["delta"] = *r.metrics.delta;
  if (r.metrics.bound_holds) j["bound_holds"] = *r.metrics.bound_holds;
  if (r.l_fc) j["l_fc"] = *r.l_fc;
  if (r.mc)
    j["mc"] = Json{{"p_hat", r.mc->p_hat},
                   {"n_samples", r.mc->n_samples},
                   {"std_err", r.mc->std_err()}};
  j["warnings"] = r.metrics.warnings;
  return j;
}

inline GraspReport grasp_report_from_json(const Json& j) {
  iodetail::check_schema(j);
  GraspReport r;
  r.fingerprint = j.value("fingerprint", std::string());
  r.metrics.force_closure = j.value("force_closure", false);
  if (j.contains("l_star")) r.metrics.l_star = j["l_star"].get<double>();
  if (j.contains("l_star_normalized"))
    r.metrics.l_star_normalized = j["l_star_normalized"].get<double>();
  if (j.contains("epsilon")) r.metrics.epsilon = j["epsilon"].get<double>();
  if (j.contains("delta")) r.metrics.delta = j["delta"].get<double>();
  if (j.contains("bound_holds"))
    r.metrics.bound_holds = j["bound_holds"].get<bool>();
  if (j.contains("l_fc")) r.l_fc = j["l_fc"].get<double>();
  if (j.contains("mc")) {
    McEstimate m;
    m.p_hat = iodetail::number_at(j["mc"], "p_hat");
    m.n_samples = static_cast<long>(iodetail::number_at(j["mc"], "n_samples"));
    r.mc = m;
  }
  if (j.contains("warnings"))
    r.metrics.warnings = j["warnings"].get<std::vector<std::string>>();
  return r;
}

/* ---- sweep CSV ---- */

inline constexpr const char* sweep_csv_header =
    "seed,contacts,l_star,l_star_normalized,epsilon,delta,l_fc,mc_p_hat,"
    "mc_std_err,converged,failed";

/* One row per grasp.  The contacts cell holds the surface points only
 * ("x y z;x y z;..."), quoted; absent metrics leave their cells empty. */
inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << sweep_csv_header << "\n";
  auto opt_cell = [&](const std::optional<double>& v) {
    return v ? format_g17(*v) : std::string();
  };
  for (const auto& row : rows) {
    out << row.seed << ",";
    out << '"';
    for (std::size_t i = 0; i < row.synth.contacts.size(); ++i) {
      const Vec3& x = row.synth.contacts[i].x;
      if (i) out << ';';
      out << format_g17(x.x()) << ' ' << format_g17(x.y()) << ' '
          << format_g17(x.z());
    }
    out << '"' << ",";
    if (row.failed) {
      out << ",,,,,,," << (row.synth.converged ? 1 : 0) << ",1\n";
      continue;
    }
    out << opt_cell(row.metrics.l_star) << ","
        << opt_cell(row.metrics.l_star_normalized) << ","
        << opt_cell(row.metrics.epsilon) << "," << opt_cell(row.metrics.delta)
        << "," << format_g17(row.l_fc) << "," << format_g17(row.mc.p_hat)
        << "," << format_g17(row.mc.std_err()) << ","
        << (row.synth.converged ? 1 : 0) << ",0\n";
  }
  return out.str();
}

} // namespace wrenchlab
