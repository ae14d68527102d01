#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "puppetscan/core_model.hpp"

namespace puppetscan {

struct IngestResult {
  Dataset dataset;
  std::vector<Diagnostic> diagnostics;
};

/// Reads one JSON event per line. Every schema violation is reported; malformed
/// lines are skipped, out-of-order timestamps are reordered with a warning.
IngestResult ingest_events(std::istream& source, const StudySpec& spec);
IngestResult ingest_events(const std::string& text, const StudySpec& spec);

/// Checks every record invariant against the spec. Empty iff the dataset is clean.
std::vector<Diagnostic> validate_dataset(const Dataset& dataset, const StudySpec& spec);

/// Writes the dataset back out in the event-log line format, records in order,
/// events in their stored order.
void write_events(std::ostream& out, const Dataset& dataset);
std::string serialize_events(const Dataset& dataset);

Json event_to_json(const UiEvent& ev);

/// Hex SHA-256 of the canonical serialization; used as the report's dataset digest.
std::string dataset_digest(const Dataset& dataset);

}  // namespace puppetscan
