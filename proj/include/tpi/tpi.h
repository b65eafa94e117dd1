#ifndef TPI_TPI_H
#define TPI_TPI_H

#include <stddef.h>

#if defined(_WIN32)
#define TPI_API __declspec(dllexport)
#else
#define TPI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tpi_status {
    TPI_OK = 0,
    TPI_ERR_VALIDATION = 2,
    TPI_ERR_IO = 3,
    TPI_ERR_NUMERICAL = 4,
    TPI_ERR_INTERNAL = 5
} tpi_status;

typedef struct tpi_params tpi_params;
typedef struct tpi_strategy tpi_strategy;

/* Message of the last failed call on this thread; empty after a successful call. */
TPI_API const char* tpi_last_error(void);
/* Strings handed out through char** parameters are released with this. */
TPI_API void tpi_string_free(char* s);

TPI_API tpi_status tpi_params_create(double kappa, double eta, double mu, double sigma, double alpha,
                                     tpi_params** out);
TPI_API tpi_status tpi_params_default(tpi_params** out);
TPI_API void tpi_params_destroy(tpi_params* p);
/* lambda, resilience-adjusted rate beta, and the frictionless target mu / lambda^2 */
TPI_API tpi_status tpi_params_derived(const tpi_params* p, double* lambda, double* beta, double* merton);

TPI_API tpi_status tpi_theta_bounds(const tpi_params* p, double* theta_bar, double* theta_under);
TPI_API tpi_status tpi_phi_sell(const tpi_params* p, double tau, double zeta, double* out);
/* piece receives a static label ("I", "II.1", ..., "III.3"); may be NULL */
TPI_API tpi_status tpi_phi_buy(const tpi_params* p, double tau, double zeta, double* out, const char** piece);
/* region receives a static label: Buy, BuyBoundary, Wait, SellBoundary, Sell */
TPI_API tpi_status tpi_classify(const tpi_params* p, double tau, double zeta, double phi, const char** region);

TPI_API tpi_status tpi_strategy_build(const tpi_params* p, double tau, double zeta, double phi,
                                      tpi_strategy** out);
TPI_API tpi_status tpi_strategy_from_json(const char* json, tpi_strategy** out);
TPI_API void tpi_strategy_destroy(tpi_strategy* s);
TPI_API tpi_status tpi_strategy_to_json(const tpi_strategy* s, char** out);
TPI_API tpi_status tpi_strategy_trajectory_csv(const tpi_strategy* s, size_t n_samples, char** out);
TPI_API tpi_status tpi_strategy_cost(const tpi_strategy* s, double* out);
TPI_API tpi_status tpi_strategy_foc(const tpi_strategy* s, size_t n_samples, double tol, char** report_json,
                                    int* passed);

TPI_API tpi_status tpi_boundary_csv(const tpi_params* p, double tau_max, double zeta_max, size_t n_tau,
                                    size_t n_zeta, char** out);

/* Grid oracle against the closed-form strategy of one state. */
TPI_API tpi_status tpi_oracle_report(const tpi_params* p, double tau, double zeta, double phi, size_t n_steps,
                                     char** report_json);
/* Monte Carlo expected utility of the closed-form strategy projected on n_cells grid cells. */
TPI_API tpi_status tpi_mc_report(const tpi_params* p, double tau, double zeta, double phi, size_t n_cells,
                                 size_t n_paths, unsigned long long seed, char** report_json);

/* options_json may be NULL or "" for defaults; passed is 1 iff every suite passed. */
TPI_API tpi_status tpi_verify(const tpi_params* p, const char* options_json, char** report_json, int* passed);

#ifdef __cplusplus
}
#endif

#endif
