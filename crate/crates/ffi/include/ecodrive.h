#ifndef ECODRIVE_H
#define ECODRIVE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum EcoStatus {
  ECO_STATUS_OK = 0,
  ECO_STATUS_NULL_POINTER = 1,
  ECO_STATUS_INVALID_ARGUMENT = 2,
  ECO_STATUS_INFEASIBLE = 3,
  ECO_STATUS_NUMERICAL = 4,
  ECO_STATUS_PARSE = 5,
  ECO_STATUS_IO = 6,
  ECO_STATUS_NOT_APPLICABLE = 7,
  ECO_STATUS_OUT_OF_RANGE = 8,
  ECO_STATUS_PANIC = 99,
} EcoStatus;

typedef enum EcoBandKind {
  ECO_BAND_KIND_OSCILLATING = 0,
  ECO_BAND_KIND_DWELLING = 1,
  ECO_BAND_KIND_RESTING = 2,
  ECO_BAND_KIND_COAST = 3,
  ECO_BAND_KIND_CLAMPED = 4,
  ECO_BAND_KIND_UNREACHABLE = 5,
} EcoBandKind;

// Bit positions of `EcoTelemetryRow::flags`.
typedef enum EcoFlag {
  ECO_FLAG_UNREACHABLE = 0,
  ECO_FLAG_INFEASIBLE_SLICE = 1,
  ECO_FLAG_PLAN_FAILED = 2,
  ECO_FLAG_SAFETY_OVERRIDE = 3,
  ECO_FLAG_STALLED = 4,
  ECO_FLAG_TIMEOUT = 5,
} EcoFlag;

// Opaque result of a simulated race.
typedef struct EcoRace EcoRace;

// Opaque scenario: vehicle, course and controller settings.
typedef struct EcoScenario EcoScenario;

// Opaque vehicle model.
typedef struct EcoVehicle EcoVehicle;

// An oscillation band and its one-period figures (SI units).
typedef struct EcoBand {
  double va;
  double vb;
  double dwell;
  double rest_dwell;
  double period;
  double distance;
  double energy;
  double avg_cost;
  enum EcoBandKind kind;
} EcoBand;

// Summary of a race. Absent values (no finish, fewer than two switches) are NaN.
typedef struct EcoRaceSummary {
  double finish_time_s;
  double total_energy_j;
  uint32_t switches;
  double min_switch_gap_s;
  double avg_speed_mps;
  double max_planned_cost_w;
} EcoRaceSummary;

// One telemetry sample. `engine_on` is 0 or 1; `flags` is a bit set with
// bit `k` for the `k`-th `EcoFlag`.
typedef struct EcoTelemetryRow {
  double t;
  double x1;
  double x2;
  int engine_on;
  uint32_t switches;
  double energy;
  double va;
  double vb;
  uint32_t flags;
} EcoTelemetryRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len - 1` bytes) and returns its full length in bytes.
size_t eco_last_error_message(char *buf, size_t len);

// Library version, a static NUL-terminated string.
const char *eco_version(void);

// The reference vehicle with constant 161 W electrical power and switching cost `alpha` (J).
enum EcoStatus eco_vehicle_new_reference(double alpha, struct EcoVehicle **out);

// Reads a params JSON file.
enum EcoStatus eco_vehicle_load(const char *path, struct EcoVehicle **out);

void eco_vehicle_free(struct EcoVehicle *v);

// Cheapest band averaging `target` on the slice of angle `slope` (rad) and
// along-track wind `wind` (m/s). Pass `INFINITY` for no safety speed.
enum EcoStatus eco_optimal_band(const struct EcoVehicle *vehicle,
                                double slope,
                                double wind,
                                double target,
                                double vsafe,
                                double delta,
                                bool fine,
                                struct EcoBand *out);

// Speeds where the acceleration vanishes with the engine off and on.
enum EcoStatus eco_equilibrium_speeds(const struct EcoVehicle *vehicle,
                                      double slope,
                                      double wind,
                                      double *v_low,
                                      double *v_high);

// Acceleration (m/s²) at speed `x2` on the given slice, engine on when `engine_on` is nonzero.
enum EcoStatus eco_acceleration(const struct EcoVehicle *vehicle,
                                double slope,
                                double wind,
                                double x2,
                                int engine_on,
                                double *out);

// Reads the scenario directory `dir`.
enum EcoStatus eco_scenario_load(const char *dir, struct EcoScenario **out);

// A bundled fixture: `flat16500`, `hill` or `gust`.
enum EcoStatus eco_scenario_fixture(const char *name, struct EcoScenario **out);

// Applies a `key=value` override. The scenario is unchanged on failure.
enum EcoStatus eco_scenario_set(struct EcoScenario *scenario, const char *assignment);

void eco_scenario_free(struct EcoScenario *s);

// Simulates the race of `scenario`.
enum EcoStatus eco_race_run(const struct EcoScenario *scenario, struct EcoRace **out);

enum EcoStatus eco_race_summary(const struct EcoRace *race, struct EcoRaceSummary *out);

// Number of telemetry rows; 0 for a null handle.
size_t eco_race_telemetry_len(const struct EcoRace *race);

enum EcoStatus eco_race_telemetry_row(const struct EcoRace *race,
                                      size_t index,
                                      struct EcoTelemetryRow *out);

// Writes telemetry, summary and speed trace of `race` into `dir`.
enum EcoStatus eco_race_write_report(const struct EcoRace *race,
                                     const struct EcoScenario *scenario,
                                     const char *dir);

void eco_race_free(struct EcoRace *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECODRIVE_H */
