#ifndef RANDOMBYTES_H
#define RANDOMBYTES_H
#include <stddef.h>
#include <stdint.h>

/* Provided by the host library (src/crypto/randombytes_hook.cpp). */
#define randombytes qpadl_pqclean_randombytes
#ifdef __cplusplus
extern "C"
#endif
int randombytes(uint8_t *buf, size_t n);

#endif
