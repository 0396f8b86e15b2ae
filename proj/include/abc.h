/* Adversarial binary coding toolkit - C API.
 *
 * All objects are opaque handles. Functions returning a pointer return NULL
 * on failure; functions returning int return ABC_OK (0) or an error code.
 * abc_last_error() describes the most recent failure on the calling thread.
 */

#ifndef ABC_H
#define ABC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define ABC_OK 0
#define ABC_ERR_INVALID_ARGUMENT 1
#define ABC_ERR_IO 2
#define ABC_ERR_FORMAT 3
#define ABC_ERR_NUMERIC 4
#define ABC_ERR_UNKNOWN 5

typedef struct abc_config abc_config;
typedef struct abc_dataset abc_dataset;
typedef struct abc_model abc_model;
typedef struct abc_codes abc_codes;

const char* abc_version(void);
const char* abc_last_error(void);

/* Configuration: plain key=value pairs (see docs/config keys). */
abc_config* abc_config_create(void);
void abc_config_destroy(abc_config* cfg);
int abc_config_load_file(abc_config* cfg, const char* path);
int abc_config_set(abc_config* cfg, const char* key, const char* value);
/* Returns a serialized key=value snapshot; valid until the next call on cfg. */
const char* abc_config_dump(abc_config* cfg);

/* Datasets (ABCF files). */
abc_dataset* abc_dataset_generate(const abc_config* cfg);
abc_dataset* abc_dataset_open(const char* path);
int abc_dataset_save(const abc_dataset* ds, const char* path);
size_t abc_dataset_size(const abc_dataset* ds);
uint32_t abc_dataset_dim(const abc_dataset* ds);
void abc_dataset_destroy(abc_dataset* ds);

/* Models (ABCM checkpoints). */
abc_model* abc_model_create(const abc_config* cfg, uint32_t input_dim);
abc_model* abc_model_open(const char* path);
int abc_model_save(const abc_model* model, const char* path);
void abc_model_destroy(abc_model* model);

/* Training. report_csv may be NULL to skip report output. */
int abc_pretrain(abc_model* model, const abc_dataset* ds, const abc_config* cfg,
                 const char* report_csv);
int abc_train_joint(abc_model* model, const abc_dataset* ds, const abc_config* cfg,
                    const char* report_csv);

/* Encoding (ABCB files). */
abc_codes* abc_encode(const abc_model* model, const abc_dataset* ds, const abc_config* cfg);
abc_codes* abc_codes_open(const char* path);
int abc_codes_save(const abc_codes* codes, const char* path);
size_t abc_codes_size(const abc_codes* codes);
uint32_t abc_codes_bits(const abc_codes* codes);
void abc_codes_destroy(abc_codes* codes);

/* Cross-view retrieval evaluation; codes row i must correspond to dataset
 * record i. Writes a CMC/mAP CSV. */
int abc_evaluate(const abc_codes* codes, const abc_dataset* ds, const abc_config* cfg,
                 const char* out_csv);

/* Scan benchmark over a synthetic random gallery (bench_* config keys). */
int abc_benchmark(const abc_config* cfg, const char* out_csv);

#ifdef __cplusplus
}
#endif

#endif /* ABC_H */
