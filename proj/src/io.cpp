#include "qmap/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qmap {

namespace {

using nlohmann::json;

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

json complex_to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(path, "expected a complex number as [re, im]");
    return cplx(j[0].get<double>(), j[1].get<double>());
}

const json& require_field(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(path + "." + key, "missing field");
    return *it;
}

std::vector<double> reals_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ParseError(path, "expected a nonempty array of reals");
    std::vector<double> out;
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(path + "[" + std::to_string(i) + "]", "expected a real");
        out.push_back(j[i].get<double>());
    }
    return out;
}

}  // namespace

const char* map_kind_tag(MapKind k) {
    switch (k) {
        case MapKind::action_matrix: return "action_matrix";
        case MapKind::kraus: return "kraus";
        case MapKind::schur: return "schur";
        case MapKind::state_map: return "state_map";
        case MapKind::canonical_form: return "canonical_form";
        case MapKind::phi_r: return "phi_r";
        case MapKind::qpure_canonical: return "qpure_canonical";
    }
    return "unknown";
}

nlohmann::json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

Mat matrix_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ParseError(path, "expected a matrix as nested arrays");
    const size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) throw ParseError(path + "[0]", "expected a matrix row");
    const size_t cols = j[0].size();
    Mat m(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != cols)
            throw ParseError(rp, "ragged matrix row");
        for (size_t c = 0; c < cols; ++c)
            m(i, c) = complex_from_json(j[i][c], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

MapDescription parse_map(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("$", e.what());
    }
    if (!j.is_object()) throw ParseError("$", "expected a JSON object");

    MapDescription d;
    const json& kind = require_field(j, "kind", "$");
    if (!kind.is_string()) throw ParseError("$.kind", "expected a string");
    bool known = false;
    for (MapKind k : {MapKind::action_matrix, MapKind::kraus, MapKind::schur, MapKind::state_map,
                      MapKind::canonical_form, MapKind::phi_r, MapKind::qpure_canonical}) {
        if (kind.get<std::string>() == map_kind_tag(k)) {
            d.kind = k;
            known = true;
            break;
        }
    }
    if (!known) throw ParseError("$.kind", "unknown kind '" + kind.get<std::string>() + "'");

    const json& n = require_field(j, "n", "$");
    if (!n.is_number_integer() || n.get<int>() <= 0)
        throw ParseError("$.n", "expected a positive integer dimension");
    d.n = n.get<int>();
    d.payload = require_field(j, "payload", "$");
    if (!d.payload.is_object()) throw ParseError("$.payload", "expected an object");
    if (j.contains("label")) {
        if (!j["label"].is_string()) throw ParseError("$.label", "expected a string");
        d.label = j["label"].get<std::string>();
    }
    build_map(d);  // validate payload shapes eagerly
    return d;
}

MapDescription parse_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("$", "cannot open file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_map(ss.str());
}

nlohmann::json to_json(const MapDescription& desc) {
    json j;
    j["kind"] = map_kind_tag(desc.kind);
    j["n"] = desc.n;
    j["label"] = desc.label;
    j["payload"] = desc.payload;
    return j;
}

Superoperator build_map(const MapDescription& d) {
    const std::string p = "$.payload";
    switch (d.kind) {
        case MapKind::action_matrix: {
            Mat a = matrix_from_json(require_field(d.payload, "action", p), p + ".action");
            if (a.rows() != d.n * d.n || a.cols() != d.n * d.n)
                throw ParseError(p + ".action", "expected an n^2 x n^2 matrix");
            return Superoperator(d.n, a);
        }
        case MapKind::kraus: {
            const json& els = require_field(d.payload, "elements", p);
            if (!els.is_array() || els.empty())
                throw ParseError(p + ".elements", "expected a nonempty array of matrices");
            std::vector<Mat> kraus;
            for (size_t i = 0; i < els.size(); ++i) {
                Mat s = matrix_from_json(els[i], p + ".elements[" + std::to_string(i) + "]");
                if (s.rows() != d.n || s.cols() != d.n)
                    throw ParseError(p + ".elements[" + std::to_string(i) + "]",
                                     "expected an n x n matrix");
                kraus.push_back(std::move(s));
            }
            return superop_from_kraus(d.n, kraus);
        }
        case MapKind::schur: {
            Mat mask = matrix_from_json(require_field(d.payload, "mask", p), p + ".mask");
            if (mask.rows() != d.n || mask.cols() != d.n)
                throw ParseError(p + ".mask", "expected an n x n matrix");
            return schur_map(mask);
        }
        case MapKind::state_map: {
            std::vector<double> w =
                reals_from_json(require_field(d.payload, "weights", p), p + ".weights");
            if (static_cast<int>(w.size()) != d.n)
                throw ParseError(p + ".weights", "expected n weights");
            return state_map_from_weights(w);
        }
        case MapKind::canonical_form: {
            const json& fam = require_field(d.payload, "family", p);
            if (!fam.is_string()) throw ParseError(p + ".family", "expected a string");
            auto family = family_from_tag(fam.get<std::string>());
            if (!family) throw ParseError(p + ".family", "unknown family tag");
            CanonicalForm form;
            form.family = *family;
            if (d.payload.contains("lambda")) form.lambda = d.payload["lambda"].get<double>();
            if (d.payload.contains("lambda_prime"))
                form.lambda_prime = d.payload["lambda_prime"].get<double>();
            if (d.payload.contains("weights"))
                form.weights = reals_from_json(d.payload["weights"], p + ".weights");
            if (d.payload.contains("exponents"))
                form.schur_exponents = reals_from_json(d.payload["exponents"], p + ".exponents");
            try {
                Superoperator s = canonical_map(form);
                if (s.n != d.n) throw ParseError(p, "family dimension does not match n");
                return s;
            } catch (const std::invalid_argument& e) {
                throw ParseError(p, e.what());
            } catch (const std::bad_optional_access&) {
                throw ParseError(p, "missing parameters for this family");
            }
        }
        case MapKind::phi_r: {
            const json& r = require_field(d.payload, "r", p);
            if (!r.is_number()) throw ParseError(p + ".r", "expected a real");
            if (d.n != 2) throw ParseError("$.n", "phi_r acts on M_2");
            try {
                return phi_r_family(r.get<double>());
            } catch (const std::invalid_argument& e) {
                throw ParseError(p + ".r", e.what());
            }
        }
        case MapKind::qpure_canonical: {
            std::vector<double> ls =
                reals_from_json(require_field(d.payload, "lambdas", p), p + ".lambdas");
            if (static_cast<int>(ls.size()) != d.n)
                throw ParseError(p + ".lambdas", "expected n exponents");
            try {
                return qpure_invertible_canonical(ls);
            } catch (const std::invalid_argument& e) {
                throw ParseError(p + ".lambdas", e.what());
            }
        }
    }
    throw std::logic_error("build_map: unreachable");
}

nlohmann::json to_json(const ToleranceConfig& cfg) {
    json j;
    j["eig_floor"] = cfg.eig_floor;
    j["rank_tol"] = cfg.rank_tol;
    j["grid_points"] = cfg.grid_points;
    j["refine_depth"] = cfg.refine_depth;
    j["bisect_tol"] = cfg.bisect_tol;
    j["t_cap"] = cfg.t_cap;
    return j;
}

nlohmann::json to_json(const CpVerdict& v) {
    json j;
    j["flag"] = v.cp;
    j["min_eigenvalue"] = v.min_eigenvalue;
    j["hermiticity_preserving"] = v.hermiticity_preserving;
    return j;
}

nlohmann::json to_json(const QPositivityVerdict& v) {
    json j;
    j["tag"] = verdict_tag_name(v.tag);
    if (v.witness_t) j["witness_t"] = *v.witness_t;
    j["eig_check"] = v.eig_check;
    json grid;
    grid["grid_points"] = v.grid_meta.grid_points;
    grid["refine_steps"] = v.grid_meta.refine_steps_used;
    grid["skipped_points"] = v.grid_meta.skipped_points;
    grid["t_cap"] = v.grid_meta.t_cap;
    grid["limit_checked"] = v.grid_meta.limit_checked;
    if (!v.grid_meta.note.empty()) grid["note"] = v.grid_meta.note;
    j["grid"] = grid;
    json trace = json::array();
    for (const auto& [t, e] : v.min_eig_trace) trace.push_back(json::array({t, e}));
    j["min_eig_trace"] = trace;
    return j;
}

nlohmann::json to_json(const GeneratorExtraction& g) {
    json j;
    j["Y"] = matrix_to_json(g.y);
    j["residual"] = g.residual;
    j["skew_defect"] = g.skew_defect;
    j["trace_defect"] = g.trace_defect;
    j["canonical"] = g.canonical();
    return j;
}

nlohmann::json to_json(const CanonicalForm& form) {
    json j;
    j["family"] = family_tag(form.family);
    j["display"] = family_display_name(form.family);
    if (form.lambda) j["lambda"] = *form.lambda;
    if (form.lambda_prime) j["lambda_prime"] = *form.lambda_prime;
    if (!form.weights.empty()) j["weights"] = form.weights;
    if (!form.schur_exponents.empty()) j["exponents"] = form.schur_exponents;
    if (form.generator) j["generator"] = to_json(*form.generator);
    j["reconstructable"] = form.reconstructable;
    if (form.reconstructable) {
        j["reconstruction_residual"] = form.reconstruction_residual;
        j["conjugator"] = matrix_to_json(form.conjugator);
    }
    return j;
}

nlohmann::json to_json(const LimitReport& rep) {
    json j;
    j["method"] = rep.method == LimitMethod::spectral ? "spectral" : "numeric_fallback";
    j["action"] = matrix_to_json(rep.limit.action);
    json res;
    for (const auto& [k, v] : rep.property_residuals) res[k] = v;
    j["residuals"] = res;
    return j;
}

namespace {

void render_text(const json& j, const std::string& key, int indent, std::ostream& out) {
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    if (key == "classification" && j.is_object() && j.contains("display")) {
        out << pad << "classification: " << j["display"].get<std::string>();
        if (j.contains("lambda")) out << ", lambda=" << num(j["lambda"].get<double>());
        if (j.contains("lambda_prime"))
            out << ", lambda'=" << num(j["lambda_prime"].get<double>());
        if (j.contains("weights")) {
            out << ", weights=(";
            for (size_t i = 0; i < j["weights"].size(); ++i)
                out << (i ? ", " : "") << num(j["weights"][i].get<double>());
            out << ")";
        }
        if (j.contains("exponents")) {
            out << ", exponents=(";
            for (size_t i = 0; i < j["exponents"].size(); ++i)
                out << (i ? ", " : "") << num(j["exponents"][i].get<double>());
            out << ")";
        }
        out << "\n";
        return;
    }
    if (key == "min_eig_trace" || key == "action" || key == "conjugator" || key == "Y") {
        return;  // bulky numeric payloads stay in the json format
    }
    if (j.is_object()) {
        if (!key.empty()) out << pad << key << ":\n";
        for (auto it = j.begin(); it != j.end(); ++it)
            render_text(it.value(), it.key(), key.empty() ? indent : indent + 1, out);
        return;
    }
    if (j.is_array()) {
        out << pad << key << ": " << j.dump() << "\n";
        return;
    }
    out << pad << key << ": ";
    if (j.is_number_float())
        out << num(j.get<double>());
    else
        out << j.dump();
    out << "\n";
}

}  // namespace

std::string emit_report(const nlohmann::json& report, ReportFormat format) {
    if (format == ReportFormat::json) return report.dump(2) + "\n";
    std::ostringstream out;
    render_text(report, "", 0, out);
    return out.str();
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

namespace {

json doc(MapKind kind, int n, const std::string& label, json payload) {
    json j;
    j["kind"] = map_kind_tag(kind);
    j["n"] = n;
    j["label"] = label;
    j["payload"] = std::move(payload);
    return j;
}

// The classification entry point shared by the CLI and the corpus runner:
// idempotent maps go through the E_n classifiers, other unital maps on M_2
// through the q-positive classification.
CanonicalForm classify_dispatch(const Superoperator& s, const ToleranceConfig& cfg) {
    if (is_idempotent_ucp(s, cfg)) {
        if (s.n == 2) return classify_E2(s, cfg);
        if (s.n == 3) return classify_E3(s, cfg);
        throw std::runtime_error("classification covers M_2 and M_3 only");
    }
    if (s.n == 2 && is_unital(s)) return classify_unital_qpos_m2(s, cfg);
    throw std::runtime_error(
        "no classifier applies: map is neither an idempotent unital CP map nor a unital map on M_2");
}

}  // namespace

void write_corpus(const std::string& dir, std::uint64_t seed) {
    std::vector<std::pair<json, json>> entries;  // (document, expectations)

    {
        json payload;
        payload["action"] = matrix_to_json(Mat::Identity(4, 4));
        json expect = {{"cp", true},
                       {"eigencheck", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", "E2_identity"}};
        entries.emplace_back(doc(MapKind::action_matrix, 2, "identity map on M_2", payload),
                             expect);
    }
    for (double r : {1.05, 1.1, 1.2, 1.3, 1.4}) {
        json payload = {{"r", r}};
        const double threshold = phi_r_threshold(r);
        json expect = {{"cp", true},
                       {"eigencheck", true},
                       {"q_positivity", "refuted"},
                       {"witness_t", threshold},
                       {"witness_tol", 1e-4},
                       {"q_threshold", threshold},
                       {"threshold_tol", 1e-6}};
        char name[64];
        std::snprintf(name, sizeof(name), "phi_r family, r = %.2f", r);
        entries.emplace_back(doc(MapKind::phi_r, 2, name, payload), expect);
    }
    {
        Mat mask(2, 2);
        mask << 1, -1, -1, 1;
        json payload;
        payload["mask"] = matrix_to_json(mask);
        json expect = {{"cp", true}, {"eigencheck", false}, {"q_positivity", "refuted"}};
        entries.emplace_back(
            doc(MapKind::schur, 2, "sign-flip Schur map (CP with eigenvalue -1)", payload),
            expect);
    }
    {
        // 1/3 (A + SAS^* + D(A)) with S the flip: unital CP of rank 3.
        const double c = 1.0 / std::sqrt(3.0);
        Mat s(2, 2), p1 = Mat::Zero(2, 2), p2 = Mat::Zero(2, 2);
        s << 0, 1, 1, 0;
        p1(0, 0) = 1;
        p2(1, 1) = 1;
        json payload;
        payload["elements"] = json::array({matrix_to_json(c * Mat::Identity(2, 2)),
                                           matrix_to_json(c * s), matrix_to_json(c * p1),
                                           matrix_to_json(c * p2)});
        json expect = {{"cp", true},
                       {"eigencheck", true},
                       {"q_positivity", "refuted"},
                       {"classification_error_contains", "rank 3"}};
        entries.emplace_back(doc(MapKind::kraus, 2, "rank-3 unital CP map on M_2", payload),
                             expect);
    }
    {
        json payload = {{"weights", {0.5, 0.5}}};
        json expect = {{"cp", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", "E2_state"},
                       {"weights", {0.5, 0.5}},
                       {"param_tol", 1e-6}};
        entries.emplace_back(doc(MapKind::state_map, 2, "trace state map on M_2", payload),
                             expect);
    }
    {
        json payload = {{"weights", {0.0, 1.0}}};
        json expect = {{"cp", true}, {"family", "E2_state"}, {"weights", {0.0, 1.0}},
                       {"param_tol", 1e-6}};
        entries.emplace_back(doc(MapKind::state_map, 2, "pure state map on M_2", payload),
                             expect);
    }
    {
        json payload = {{"weights", {0.2, 0.3, 0.5}}};
        json expect = {{"cp", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", "E3_state"},
                       {"weights", {0.2, 0.3, 0.5}},
                       {"param_tol", 1e-6}};
        entries.emplace_back(
            doc(MapKind::state_map, 3, "faithful state map on M_3", payload), expect);
    }
    {
        Mat mask = Mat::Identity(2, 2);
        json payload;
        payload["mask"] = matrix_to_json(mask);
        json expect = {{"cp", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", "E2_diagonal"}};
        entries.emplace_back(doc(MapKind::schur, 2, "diagonal map on M_2", payload), expect);
    }
    struct E3Doc {
        Family family;
        double lambda;
    };
    for (const E3Doc& e : {E3Doc{Family::E3_I, 0.3}, E3Doc{Family::E3_II, 0.25},
                           E3Doc{Family::E3_III, 0.4}, E3Doc{Family::E3_IV, 0.0},
                           E3Doc{Family::E3_V, 0.0}, E3Doc{Family::E3_VI, 0.25},
                           E3Doc{Family::E3_VII, 0.0}}) {
        json payload = {{"family", family_tag(e.family)}};
        json expect = {{"cp", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", family_tag(e.family)},
                       {"param_tol", 1e-6}};
        std::string label = family_display_name(e.family);
        if (e.family == Family::E3_I || e.family == Family::E3_II ||
            e.family == Family::E3_III || e.family == Family::E3_VI) {
            payload["lambda"] = e.lambda;
            expect["lambda"] = e.lambda;
            label += ", lambda = " + num(e.lambda);
        }
        entries.emplace_back(doc(MapKind::canonical_form, 3, label, payload), expect);
    }
    {
        json payload = {{"lambdas", {0.75, -0.75}}};
        json expect = {{"cp", true},
                       {"eigencheck", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", "M2_invertible"},
                       {"exponents", {0.75, -0.75}},
                       {"param_tol", 1e-6}};
        entries.emplace_back(
            doc(MapKind::qpure_canonical, 2, "invertible canonical Schur map", payload), expect);
    }
    {
        json payload = {{"family", "M2_rank2"}, {"lambda", 0.7}, {"lambda_prime", 0.2}};
        json expect = {{"cp", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", "M2_rank2"},
                       {"lambda", 0.7},
                       {"lambda_prime", 0.2},
                       {"param_tol", 1e-6}};
        entries.emplace_back(
            doc(MapKind::canonical_form, 2, "rank-two canonical map (0.7, 0.2)", payload),
            expect);
    }
    {
        // A seeded conjugate of the (0.8, 0.3) canonical map, stored as a raw
        // action matrix; classification must recover the parameters.
        std::mt19937_64 rng(seed);
        Mat u = random_unitary(rng, 2);
        Superoperator s = conjugate_map(m2_rank2_canonical(0.8, 0.3), u);
        json payload;
        payload["action"] = matrix_to_json(s.action);
        json expect = {{"cp", true},
                       {"q_positivity", "certified_sampled"},
                       {"family", "M2_rank2"},
                       {"lambda", 0.8},
                       {"lambda_prime", 0.3},
                       {"param_tol", 1e-6}};
        entries.emplace_back(
            doc(MapKind::action_matrix, 2, "conjugated rank-two map (0.8, 0.3)", payload),
            expect);
    }

    json manifest;
    manifest["seed"] = seed;
    manifest["documents"] = json::array();
    int idx = 0;
    for (auto& [document, expect] : entries) {
        char name[32];
        std::snprintf(name, sizeof(name), "map_%02d.json", idx++);
        std::ofstream out(dir + "/" + name);
        if (!out) throw std::runtime_error("write_corpus: cannot write to " + dir);
        out << document.dump(2) << "\n";
        json entry;
        entry["file"] = name;
        entry["label"] = document["label"];
        entry["expect"] = expect;
        manifest["documents"].push_back(entry);
    }
    std::ofstream mout(dir + "/manifest.json");
    if (!mout) throw std::runtime_error("write_corpus: cannot write manifest");
    mout << manifest.dump(2) << "\n";
}

std::vector<std::string> verify_corpus(const std::string& dir, const ToleranceConfig& cfg) {
    std::vector<std::string> failures;
    std::ifstream min(dir + "/manifest.json");
    if (!min) return {"cannot open " + dir + "/manifest.json"};
    json manifest = json::parse(min, nullptr, false);
    if (manifest.is_discarded()) return {"manifest.json is not valid JSON"};

    for (const json& entry : manifest["documents"]) {
        const std::string file = entry["file"].get<std::string>();
        auto fail = [&](const std::string& what) { failures.push_back(file + ": " + what); };
        MapDescription desc;
        Superoperator s;
        try {
            desc = parse_map_file(dir + "/" + file);
            s = build_map(desc);
        } catch (const std::exception& e) {
            fail(e.what());
            continue;
        }
        const json& expect = entry["expect"];
        const double param_tol =
            expect.contains("param_tol") ? expect["param_tol"].get<double>() : 1e-6;

        if (expect.contains("cp")) {
            bool cp = is_completely_positive(s, cfg).cp;
            if (cp != expect["cp"].get<bool>()) fail("cp verdict mismatch");
        }
        if (expect.contains("eigencheck")) {
            bool ec = has_no_negative_eigenvalues(s, cfg);
            if (ec != expect["eigencheck"].get<bool>()) fail("eigencheck mismatch");
        }
        if (expect.contains("q_positivity")) {
            QPositivityVerdict v = certify_q_positive(s, cfg);
            if (std::string(verdict_tag_name(v.tag)) != expect["q_positivity"].get<std::string>())
                fail("q_positivity tag mismatch: got " + std::string(verdict_tag_name(v.tag)));
            else if (expect.contains("witness_t")) {
                double tol = expect["witness_tol"].get<double>();
                if (!v.witness_t || std::abs(*v.witness_t - expect["witness_t"].get<double>()) > tol)
                    fail("witness_t mismatch");
            }
        }
        if (expect.contains("q_threshold")) {
            auto th = q_threshold(s, cfg);
            double tol = expect["threshold_tol"].get<double>();
            if (!th || std::abs(*th - expect["q_threshold"].get<double>()) > tol)
                fail("q_threshold mismatch");
        }
        if (expect.contains("family")) {
            try {
                CanonicalForm form = classify_dispatch(s, cfg);
                if (std::string(family_tag(form.family)) != expect["family"].get<std::string>()) {
                    fail("family mismatch: got " + std::string(family_tag(form.family)));
                } else if (form.family == Family::M2_rank2 && expect.contains("lambda") &&
                           expect.contains("lambda_prime")) {
                    // either swap-conjugate orientation of (lambda, lambda')
                    double el = expect["lambda"].get<double>();
                    double elp = expect["lambda_prime"].get<double>();
                    double l = form.lambda.value_or(1e300);
                    double lp = form.lambda_prime.value_or(1e300);
                    bool as_is = std::abs(l - el) <= param_tol && std::abs(lp - elp) <= param_tol;
                    bool flipped = std::abs(l - (1.0 - elp)) <= param_tol &&
                                   std::abs(lp - (1.0 - el)) <= param_tol;
                    if (!as_is && !flipped) fail("rank-2 parameter mismatch");
                } else {
                    if (expect.contains("lambda") &&
                        std::abs(form.lambda.value_or(1e300) - expect["lambda"].get<double>()) >
                            param_tol)
                        fail("lambda mismatch");
                    if (expect.contains("lambda_prime") &&
                        std::abs(form.lambda_prime.value_or(1e300) -
                                 expect["lambda_prime"].get<double>()) > param_tol)
                        fail("lambda_prime mismatch");
                    if (expect.contains("weights")) {
                        auto w = expect["weights"].get<std::vector<double>>();
                        if (w.size() != form.weights.size())
                            fail("weights size mismatch");
                        else
                            for (size_t i = 0; i < w.size(); ++i)
                                if (std::abs(w[i] - form.weights[i]) > param_tol) {
                                    fail("weights mismatch");
                                    break;
                                }
                    }
                    if (expect.contains("exponents")) {
                        auto w = expect["exponents"].get<std::vector<double>>();
                        if (w.size() != form.schur_exponents.size())
                            fail("exponents size mismatch");
                        else
                            for (size_t i = 0; i < w.size(); ++i)
                                if (std::abs(w[i] - form.schur_exponents[i]) > param_tol) {
                                    fail("exponents mismatch");
                                    break;
                                }
                    }
                }
            } catch (const std::exception& e) {
                fail(std::string("classification failed: ") + e.what());
            }
        }
        if (expect.contains("classification_error_contains")) {
            try {
                classify_dispatch(s, cfg);
                fail("expected a classification error");
            } catch (const std::exception& e) {
                if (std::string(e.what()).find(
                        expect["classification_error_contains"].get<std::string>()) ==
                    std::string::npos)
                    fail("classification error message mismatch: " + std::string(e.what()));
            }
        }
    }
    return failures;
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

struct CliOptions {
    ToleranceConfig cfg;
    ReportFormat format = ReportFormat::json;
    std::uint64_t seed = 12345;
};

json report_shell(const CliOptions& opt) {
    json report;
    report["tool_version"] = kToolVersion;
    report["config"] = to_json(opt.cfg);
    report["seed"] = opt.seed;
    return report;
}

void run_analyze(const std::string& file, const CliOptions& opt, std::ostream& out) {
    MapDescription desc = parse_map_file(file);
    Superoperator s = build_map(desc);
    json report = report_shell(opt);
    report["input"] = desc.label.empty() ? file : desc.label;
    report["verdicts"]["cp"] = to_json(is_completely_positive(s, opt.cfg));
    json eig;
    eig["no_negative_eigenvalues"] = has_no_negative_eigenvalues(s, opt.cfg);
    json sp = json::array();
    for (const cplx& z : spectrum(s)) sp.push_back(complex_to_json(z));
    eig["spectrum"] = sp;
    report["verdicts"]["eigencheck"] = eig;
    QPositivityVerdict v = certify_q_positive(s, opt.cfg);
    report["verdicts"]["q_positivity"] = to_json(v);
    if (v.tag == VerdictTag::refuted && is_completely_positive(s, opt.cfg).cp &&
        has_no_negative_eigenvalues(s, opt.cfg)) {
        auto th = q_threshold(s, opt.cfg);
        if (th) report["verdicts"]["q_threshold"] = *th;
    }
    out << emit_report(report, opt.format);
}

void run_classify(const std::string& file, const CliOptions& opt, std::ostream& out) {
    MapDescription desc = parse_map_file(file);
    Superoperator s = build_map(desc);
    json report = report_shell(opt);
    report["input"] = desc.label.empty() ? file : desc.label;
    try {
        report["verdicts"]["classification"] = to_json(classify_dispatch(s, opt.cfg));
    } catch (const std::exception& e) {
        report["verdicts"]["classification_error"] = e.what();
    }
    out << emit_report(report, opt.format);
}

void run_limit(const std::string& file, const CliOptions& opt, std::ostream& out) {
    MapDescription desc = parse_map_file(file);
    Superoperator s = build_map(desc);
    json report = report_shell(opt);
    report["input"] = desc.label.empty() ? file : desc.label;
    try {
        report["verdicts"]["limit"] = to_json(limit_map(s, opt.cfg));
    } catch (const std::exception& e) {
        report["verdicts"]["limit_error"] = e.what();
    }
    out << emit_report(report, opt.format);
}

void run_dominates(const std::string& fa, const std::string& fb, const CliOptions& opt,
                   std::ostream& out) {
    MapDescription da = parse_map_file(fa), db = parse_map_file(fb);
    Superoperator a = build_map(da), b = build_map(db);
    json report = report_shell(opt);
    report["inputs"] = json::array(
        {da.label.empty() ? fa : da.label, db.label.empty() ? fb : db.label});
    report["verdicts"]["dominance"] = to_json(q_dominates(a, b, opt.cfg));
    out << emit_report(report, opt.format);
}

json corner_report(const CornerProblem& p, const CliOptions& opt) {
    json corner;
    corner["is_corner"] = is_corner(p, opt.cfg);
    corner["q_corner"] = to_json(is_q_corner(p, opt.cfg));
    try {
        RectangularMap sigma = limit_corner(p, opt.cfg);
        json lm;
        lm["idempotency_residual"] = distance(compose(sigma, sigma), sigma);
        lm["range_residual"] = distance(compose(sigma, p.gamma), p.gamma);
        lm["action"] = matrix_to_json(sigma.action);
        corner["limit_corner"] = lm;
    } catch (const std::exception& e) {
        corner["limit_corner_error"] = e.what();
    }
    auto witness = hypermax_refutation_search(p, opt.cfg);
    json hm;
    hm["witness_found"] = witness.has_value();
    if (witness) {
        hm["compression"] = matrix_to_json(witness->compression);
        hm["inequality_evidence"] = witness->inequality_evidence;
        hm["dominance"] = to_json(witness->dominance);
    }
    corner["hypermax_refutation"] = hm;
    return corner;
}

void run_corner(const std::vector<std::string>& files, const std::string& flip,
                const std::string& unitary, const CliOptions& opt, std::ostream& out) {
    json report = report_shell(opt);
    CornerProblem p;
    if (!flip.empty()) {
        MapDescription d = parse_map_file(flip);
        Superoperator phi = build_map(d);
        Mat u;
        if (unitary == "identity") {
            u = Mat::Identity(phi.n, phi.n);
        } else if (unitary == "swap") {
            if (phi.n != 2) throw ParseError("$", "--unitary swap requires n = 2");
            u = swap_unitary(2, 0, 1);
        } else {
            std::ifstream in(unitary);
            if (!in) throw ParseError("$", "cannot open unitary file '" + unitary + "'");
            json j = json::parse(in, nullptr, false);
            if (j.is_discarded() || !j.contains("matrix"))
                throw ParseError("$", "unitary file must contain a 'matrix' field");
            u = matrix_from_json(j["matrix"], "$.matrix");
        }
        p = flip_corner(phi, u);
        report["input"] = d.label.empty() ? flip : d.label;
    } else {
        MapDescription dphi = parse_map_file(files[0]);
        MapDescription dgamma = parse_map_file(files[1]);
        MapDescription dpsi = parse_map_file(files[2]);
        Superoperator phi = build_map(dphi), psi = build_map(dpsi);
        Superoperator g = build_map(dgamma);
        if (g.n != phi.n || g.n != psi.n)
            throw ParseError("$", "corner description dimensions do not match");
        p = make_corner_problem(phi, rect_from_superop(g), psi);
        report["inputs"] = json::array({files[0], files[1], files[2]});
    }
    report["verdicts"]["corner"] = corner_report(p, opt);
    out << emit_report(report, opt.format);
}

void run_witness(const std::string& file, const CliOptions& opt, std::ostream& out) {
    MapDescription desc = parse_map_file(file);
    Superoperator s = build_map(desc);
    json report = report_shell(opt);
    report["input"] = desc.label.empty() ? file : desc.label;
    json w;
    if (s.n == 2 && is_unital(s) && superop_rank(s, opt.cfg) == 2) {
        Rank2Params params = canonical_rank2_params(s, opt.cfg);
        auto [phi, witness] = rank2_m2_subordinate_witness(params.lambda, params.lambda_prime);
        w["kind"] = "m2_rank2_subordinate";
        w["lambda"] = params.lambda;
        w["lambda_prime"] = params.lambda_prime;
        w["witness_rank"] = superop_rank(witness, opt.cfg);
        w["dominance"] = to_json(q_dominates(phi, witness, opt.cfg));
    } else if (s.n == 3) {
        auto witness = annihilator_compression_witness(s, opt.cfg);
        w["kind"] = "m3_annihilator_compression";
        w["witness_found"] = witness.has_value();
        if (witness) {
            w["phi_prime_qpos"] = to_json(witness->phi_prime_qpos);
            w["dominance"] = to_json(witness->dominance);
            w["subordinate_gap"] = witness->subordinate_gap;
        }
    } else {
        w["kind"] = "none";
        w["note"] = "no purity refutation construction applies to this input";
    }
    report["verdicts"]["purity_refutations"] = w;
    out << emit_report(report, opt.format);
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"numerical analysis of q-positive maps on matrix algebras"};
    app.name("qmap");
    app.fallthrough();  // global flags may follow the subcommand

    CliOptions opt;
    if (const char* env = std::getenv("QMAP_SEED")) opt.seed = std::strtoull(env, nullptr, 10);

    std::string config_file, format = "json", seed_str;
    double tol = -1, t_cap = -1, bisect = -1;
    int grid = -1, refine = -1;
    app.add_option("--config", config_file, "JSON file with tolerance configuration");
    app.add_option("--tol", tol, "relative eigenvalue floor");
    app.add_option("--grid", grid, "grid points for the compactified t-grid");
    app.add_option("--refine", refine, "max bisection steps");
    app.add_option("--t-cap", t_cap, "largest sampled t");
    app.add_option("--bisect-tol", bisect, "absolute t tolerance for bisection");
    app.add_option("--format", format, "report format: json or text")
        ->check(CLI::IsMember({"json", "text"}));
    app.add_option("--seed", seed_str, "seed for generated corpora");

    std::string analyze_file, classify_file, limit_file, witness_file;
    std::string dom_a, dom_b;
    std::vector<std::string> corner_files;
    std::string flip_file, unitary_spec = "swap";
    std::string corpus_action, corpus_dir = "corpus";

    CLI::App* analyze = app.add_subcommand("analyze", "CP, eigenvalue, and q-positivity checks");
    analyze->add_option("map", analyze_file)->required();
    CLI::App* classify = app.add_subcommand("classify", "canonical-form classification");
    classify->add_option("map", classify_file)->required();
    CLI::App* limit = app.add_subcommand("limit", "limit map and its identities");
    limit->add_option("map", limit_file)->required();
    CLI::App* dominates = app.add_subcommand("dominates", "q-dominance of the first map over the second");
    dominates->add_option("a", dom_a)->required();
    dominates->add_option("b", dom_b)->required();
    CLI::App* corner = app.add_subcommand("corner", "corner and hyper-maximality analysis");
    corner->add_option("maps", corner_files, "phi gamma psi descriptions")->expected(0, 3);
    corner->add_option("--flip", flip_file, "build the flip corner of this map");
    corner->add_option("--unitary", unitary_spec, "identity, swap, or a JSON matrix file");
    CLI::App* witness = app.add_subcommand("witness", "q-purity refutation witnesses");
    witness->add_option("map", witness_file)->required();
    CLI::App* corpus = app.add_subcommand("corpus", "regression corpus maintenance");
    corpus->add_option("action", corpus_action, "verify or generate")
        ->required()
        ->check(CLI::IsMember({"verify", "generate"}));
    corpus->add_option("--dir", corpus_dir, "corpus directory");

    app.require_subcommand(1);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw ParseError("$", "cannot open config file '" + config_file + "'");
            json j = json::parse(in, nullptr, false);
            if (j.is_discarded()) throw ParseError("$", "config file is not valid JSON");
            if (j.contains("eig_floor")) opt.cfg.eig_floor = j["eig_floor"].get<double>();
            if (j.contains("rank_tol")) opt.cfg.rank_tol = j["rank_tol"].get<double>();
            if (j.contains("grid_points")) opt.cfg.grid_points = j["grid_points"].get<int>();
            if (j.contains("refine_depth")) opt.cfg.refine_depth = j["refine_depth"].get<int>();
            if (j.contains("bisect_tol")) opt.cfg.bisect_tol = j["bisect_tol"].get<double>();
            if (j.contains("t_cap")) opt.cfg.t_cap = j["t_cap"].get<double>();
        }
        if (tol > 0) opt.cfg.eig_floor = tol;
        if (grid > 0) opt.cfg.grid_points = grid;
        if (refine > 0) opt.cfg.refine_depth = refine;
        if (t_cap > 0) opt.cfg.t_cap = t_cap;
        if (bisect > 0) opt.cfg.bisect_tol = bisect;
        if (!seed_str.empty()) opt.seed = std::strtoull(seed_str.c_str(), nullptr, 10);
        opt.format = format == "text" ? ReportFormat::text : ReportFormat::json;
        opt.cfg.validate();

        if (*analyze) run_analyze(analyze_file, opt, out);
        if (*classify) run_classify(classify_file, opt, out);
        if (*limit) run_limit(limit_file, opt, out);
        if (*dominates) run_dominates(dom_a, dom_b, opt, out);
        if (*corner) {
            if (flip_file.empty() && corner_files.size() != 3)
                throw ParseError("$", "corner needs three map files or --flip");
            run_corner(corner_files, flip_file, unitary_spec, opt, out);
        }
        if (*witness) run_witness(witness_file, opt, out);
        if (*corpus) {
            if (corpus_action == "generate") {
                write_corpus(corpus_dir, opt.seed);
                out << "corpus written to " << corpus_dir << "\n";
            } else {
                auto failures = verify_corpus(corpus_dir, opt.cfg);
                for (const std::string& f : failures) err << "[FAIL] " << f << "\n";
                out << (failures.empty() ? "corpus verify: all documents match\n"
                                         : "corpus verify: mismatches found\n");
                if (!failures.empty()) return 2;
            }
        }
    } catch (const ParseError& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "numeric failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace qmap
