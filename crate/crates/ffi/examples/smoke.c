#include <math.h>
#include <stdio.h>

#include "ecodrive.h"

int main(void) {
  EcoVehicle *vehicle = NULL;
  if (eco_vehicle_new_reference(10.0, &vehicle) != ECO_STATUS_OK) return 1;

  EcoBand band;
  if (eco_optimal_band(vehicle, 0.0, 0.0, 7.0, INFINITY, 0.5, true, &band) != ECO_STATUS_OK) return 2;
  printf("band %.4f %.4f %.4f\n", band.va, band.vb, band.avg_cost);

  if (eco_optimal_band(vehicle, 0.0, 0.0, 40.0, INFINITY, 0.5, false, &band) != ECO_STATUS_INFEASIBLE) return 3;
  char msg[256];
  eco_last_error_message(msg, sizeof msg);
  printf("error %s\n", msg);

  EcoScenario *scenario = NULL;
  if (eco_scenario_fixture("flat16500", &scenario) != ECO_STATUS_OK) return 4;
  if (eco_scenario_set(scenario, "length=1000") != ECO_STATUS_OK) return 5;
  if (eco_scenario_set(scenario, "duration=143") != ECO_STATUS_OK) return 6;

  EcoRace *race = NULL;
  if (eco_race_run(scenario, &race) != ECO_STATUS_OK) return 7;
  EcoRaceSummary summary;
  eco_race_summary(race, &summary);
  printf("race %.3f %u %zu\n", summary.avg_speed_mps, summary.switches, eco_race_telemetry_len(race));

  eco_race_free(race);
  eco_scenario_free(scenario);
  eco_vehicle_free(vehicle);
  return 0;
}
