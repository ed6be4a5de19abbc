#include "tsfb/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "json.hpp"

namespace tsfb::io {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(where + ": value is not finite");
  return d;
}

Matrix matrix_from_json(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw ParseError(std::string("model: missing \"") + key + "\"");
  }
  const json& rows = doc.at(key);
  if (!rows.is_array() || rows.empty()) {
    throw ParseError(std::string("model: \"") + key +
                     "\" must be a nonempty array of rows");
  }
  const std::size_t cols = rows.front().is_array() ? rows.front().size() : 0;
  if (cols == 0) {
    throw ParseError(std::string("model: \"") + key + "\" rows must be nonempty arrays");
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(std::string("model: \"") + key + "\" row " +
                       std::to_string(i) + " has the wrong length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = number_at(
          row[j], std::string(key) + "[" + std::to_string(i) + "][" +
                      std::to_string(j) + "]");
    }
  }
  return m;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

TimeScale parse_scale_json(const std::string& text) {
  const json doc = parse_document(text, "scale");
  if (!doc.is_object()) throw ParseError("scale: document must be an object");
  if (doc.contains("unit")) {
    if (!doc.at("unit").is_string() || doc.at("unit").get<std::string>() != "s") {
      throw ParseError("scale: unit must be \"s\"");
    }
  }
  if (!doc.contains("elements") || !doc.at("elements").is_array()) {
    throw ParseError("scale: missing \"elements\" array");
  }
  const json& arr = doc.at("elements");
  if (arr.empty()) throw ParseError("scale: \"elements\" must be nonempty");

  std::vector<Element> elements;
  elements.reserve(arr.size());
  double prev_end = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "scale: element " + std::to_string(i);
    const json& e = arr[i];
    if (!e.is_object() || e.size() != 1) {
      throw ParseError(where + ": expected {\"point\": t} or {\"interval\": [a, b]}");
    }
    Element el;
    if (e.contains("point")) {
      el = Point{number_at(e.at("point"), where)};
    } else if (e.contains("interval")) {
      const json& iv = e.at("interval");
      if (!iv.is_array() || iv.size() != 2) {
        throw ParseError(where + ": interval must be [a, b]");
      }
      const double a = number_at(iv[0], where);
      const double b = number_at(iv[1], where);
      if (!(a < b)) throw ParseError(where + ": interval requires a < b");
      el = Interval{a, b};
    } else {
      throw ParseError(where + ": unknown element kind");
    }
    if (!(element_begin(el) > prev_end + kTimeTolerance)) {
      throw ParseError(where + ": elements must be strictly ascending and disjoint");
    }
    prev_end = element_end(el);
    elements.push_back(el);
  }
  return TimeScale(std::move(elements));
}

TimeScale load_scale(const std::filesystem::path& path) {
  return parse_scale_json(read_file(path));
}

std::string scale_to_json(const TimeScale& ts) {
  std::ostringstream os;
  os << "{\"elements\": [";
  bool first = true;
  for (const Element& e : ts.elements()) {
    os << (first ? "" : ", ");
    first = false;
    if (const auto* p = std::get_if<Point>(&e)) {
      os << "{\"point\": " << format_double(p->t) << "}";
    } else {
      const auto& iv = std::get<Interval>(e);
      os << "{\"interval\": [" << format_double(iv.a) << ", "
         << format_double(iv.b) << "]}";
    }
  }
  os << "], \"unit\": \"s\"}\n";
  return os.str();
}

ContinuousLTI parse_model_json(const std::string& text) {
  const json doc = parse_document(text, "model");
  if (!doc.is_object()) throw ParseError("model: document must be an object");
  ContinuousLTI plant{matrix_from_json(doc, "A_hat"), matrix_from_json(doc, "B_hat")};
  try {
    plant.validate();
  } catch (const ValidationError& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  return plant;
}

ContinuousLTI load_model(const std::filesystem::path& path) {
  return parse_model_json(read_file(path));
}

std::string gains_csv(const GainSchedule& schedule) {
  std::ostringstream os;
  os << "t";
  if (!schedule.entries.empty()) {
    const Matrix& k0 = schedule.entries.front().K;
    for (Eigen::Index i = 0; i < k0.rows(); ++i) {
      for (Eigen::Index j = 0; j < k0.cols(); ++j) {
        os << ",K_" << (i + 1) << (j + 1);
      }
    }
  }
  os << ",min_sv\n";
  for (const GainEntry& e : schedule.entries) {
    os << format_double(e.t);
    for (Eigen::Index i = 0; i < e.K.rows(); ++i) {
      for (Eigen::Index j = 0; j < e.K.cols(); ++j) {
        os << ',' << format_double(e.K(i, j));
      }
    }
    os << ',' << format_double(e.min_sv) << '\n';
  }
  return os.str();
}

std::string trajectory_csv(const SimResult& result) {
  std::ostringstream os;
  os << "t";
  if (!result.samples.empty()) {
    for (Eigen::Index i = 0; i < result.samples.front().x.size(); ++i) {
      os << ",x_" << (i + 1);
    }
    for (Eigen::Index i = 0; i < result.samples.front().u.size(); ++i) {
      os << ",u_" << (i + 1);
    }
  }
  os << '\n';
  for (const Sample& s : result.samples) {
    os << format_double(s.t);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) os << ',' << format_double(s.x(i));
    for (Eigen::Index i = 0; i < s.u.size(); ++i) os << ',' << format_double(s.u(i));
    os << '\n';
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "k,alpha,settling_time,max_gain_norm,status\n";
  for (const SweepRow& r : rows) {
    os << r.k << ',' << format_double(r.alpha) << ','
       << (r.settling_time ? format_double(*r.settling_time) : "none") << ','
       << (std::isnan(r.max_gain_norm) ? "none" : format_double(r.max_gain_norm))
       << ',' << r.status << '\n';
  }
  return os.str();
}

std::string certificate_json(const StabilityCertificate& cert) {
  auto num = [](double v) -> ordered_json {
    if (!std::isfinite(v)) return nullptr;
    return v;
  };
  ordered_json j;
  j["eta"] = num(cert.eta);
  j["rho"] = num(cert.rho_bound);
  j["nu"] = num(cert.nu);
  j["pass"] = cert.pass;
  j["worst_node"] = num(cert.worst_node);
  j["worst_margin"] = num(cert.worst_margin);
  j["eps2"] = num(cert.eps2);
  j["mu_max"] = num(cert.mu_max);
  j["nu_floor"] = num(cert.nu_floor);
  j["nu_stated"] = num(cert.nu_stated);
  j["rate_admissible"] = cert.rate_admissible;
  j["dense_dependent"] = cert.dense_dependent;
  j["checked_nodes"] = cert.checked_nodes;
  j["diagnostic"] = cert.diagnostic;
  return j.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                ec.message());
  }
}

}  // namespace tsfb::io
