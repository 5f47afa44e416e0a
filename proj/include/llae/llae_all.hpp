#pragma once

#include "llae/csr.hpp"
#include "llae/dataset.hpp"
#include "llae/eigen.hpp"
#include "llae/error.hpp"
#include "llae/io.hpp"
#include "llae/llae.hpp"
#include "llae/matrix.hpp"
#include "llae/schur.hpp"
#include "llae/sylvester.hpp"
#include "llae/zsl.hpp"
