/* C interface for the lightcone exchange-network simulator.
 *
 * Maintained by hand alongside ../src/lib.rs (a test checks that every
 * exported symbol appears here). Link against the `lightcone_ffi` static or
 * shared library.
 *
 * Conventions:
 *   - Every fallible function returns an lc_status; out-parameters are
 *     written only on LC_OK (except where noted).
 *   - lc_last_error_message() describes the most recent failure on the
 *     calling thread; the pointer is valid until the thread's next lc_* call.
 *   - Events are (x_km, y_km, z_km, t_us); boost velocities are km/us and
 *     must be strictly slower than light (0.299792458 km/us).
 */

#ifndef LIGHTCONE_H
#define LIGHTCONE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lc_status {
  LC_OK = 0,
  LC_NULL_ARGUMENT = 1,
  LC_INVALID_UTF8 = 2,
  LC_INVALID_ARGUMENT = 3,
  LC_SUPERLUMINAL_BOOST = 4,
  LC_NOT_SPACELIKE = 5,
  LC_CONFIG_ERROR = 6,
  LC_IO_ERROR = 7,
  LC_UNKNOWN_EVENT = 8,
  LC_PANIC = 9,
} lc_status;

/* Interval classes written by lc_classify / lc_scenario_flip. */
#define LC_CLASS_TIMELIKE 0
#define LC_CLASS_SPACELIKE 1
#define LC_CLASS_LIGHTLIKE 2

/* Frame orderings written by lc_ordering_in_frame. */
#define LC_ORDER_A_BEFORE_B 0
#define LC_ORDER_B_BEFORE_A 1
#define LC_ORDER_INDISTINGUISHABLE 2

/* Opaque scenario handle. */
typedef struct LcScenario LcScenario;

/* Diagnostics. */
const char *lc_last_error_message(void);
const char *lc_version(void);

/* Pure Minkowski geometry (km, us). */
double lc_interval_squared(double ax, double ay, double az, double at_us,
                           double bx, double by, double bz, double bt_us);
double lc_light_time_us(double distance_km);
double lc_medium_time_us(double distance_km, double refractive_index);
lc_status lc_gravitational_rate(double altitude_m, double *out_rate);

lc_status lc_classify(double ax, double ay, double az, double at_us,
                      double bx, double by, double bz, double bt_us,
                      double epsilon_km2, int32_t *out_class);

/* Writes (x', y', z', t') into out_coords[0..4]. */
lc_status lc_boost_event(double vx, double vy, double vz,
                         double x, double y, double z, double t_us,
                         double *out_coords);

lc_status lc_ordering_in_frame(double ax, double ay, double az, double at_us,
                               double bx, double by, double bz, double bt_us,
                               double vx, double vy, double vz,
                               double tolerance_us, int32_t *out_order);

/* Writes the order-reversing boost velocity (km/us) into out_velocity[0..3].
 * LC_NOT_SPACELIKE when the pair has absolute order. */
lc_status lc_flip_boost(double ax, double ay, double az, double at_us,
                        double bx, double by, double bz, double bt_us,
                        double margin, double *out_velocity);

/* Scenario runs. */
lc_status lc_scenario_load(const char *config_path, LcScenario **out_scenario);
void lc_scenario_free(LcScenario *scenario);
lc_status lc_scenario_event_count(const LcScenario *scenario, uint64_t *out_count);
lc_status lc_scenario_simulate(const LcScenario *scenario, const char *out_dir);

/* Writes the flip velocity into out_velocity[0..3] and the pair's interval
 * class into out_class (the class is written even on LC_NOT_SPACELIKE). */
lc_status lc_scenario_flip(const LcScenario *scenario,
                           const char *event_a, const char *event_b,
                           double *out_velocity, int32_t *out_class);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LIGHTCONE_H */
