#ifndef QMAP_IO_HPP
#define QMAP_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmap/classify.hpp"
#include "qmap/corners.hpp"

namespace qmap {

inline constexpr const char* kToolVersion = "qmap 0.1.0";

enum class MapKind {
    action_matrix,
    kraus,
    schur,
    state_map,
    canonical_form,
    phi_r,
    qpure_canonical,
};

const char* map_kind_tag(MapKind k);

// Wire description of a map: {"kind": ..., "n": ..., "label": ...,
// "payload": {...}} with complex numbers as [re, im] pairs.
struct MapDescription {
    MapKind kind = MapKind::action_matrix;
    int n = 0;
    std::string label;
    nlohmann::json payload;
};

// Schema violations carry the JSON path of the offending field.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& path, const std::string& what)
        : std::runtime_error("parse error at " + path + ": " + what) {}
};

MapDescription parse_map(const std::string& text);
MapDescription parse_map_file(const std::string& path);
nlohmann::json to_json(const MapDescription& desc);
Superoperator build_map(const MapDescription& desc);

// JSON encodings of matrices and verdicts (complex entries as [re, im]).
nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json to_json(const ToleranceConfig& cfg);
nlohmann::json to_json(const CpVerdict& v);
nlohmann::json to_json(const QPositivityVerdict& v);
nlohmann::json to_json(const CanonicalForm& form);
nlohmann::json to_json(const LimitReport& rep);
nlohmann::json to_json(const GeneratorExtraction& g);

enum class ReportFormat { json, text };

// Renders a report object; json output is schema-stable and byte-identical
// for identical inputs, text output carries the human-readable form names.
std::string emit_report(const nlohmann::json& report, ReportFormat format);

// CLI entry point.  Exit codes: 0 = analysis completed (verdicts may still be
// refuted), 1 = usage or schema error, 2 = internal numeric failure.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Writes the regression corpus (map documents plus a manifest of expected
// verdicts) into dir; expectations are arithmetic from the closed forms.
void write_corpus(const std::string& dir, std::uint64_t seed);

// Runs every corpus document against its expectations; returns the failures.
std::vector<std::string> verify_corpus(const std::string& dir, const ToleranceConfig& cfg);

}  // namespace qmap

#endif
