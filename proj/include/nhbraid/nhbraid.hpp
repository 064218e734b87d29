#pragma once

#include "nhbraid/types.hpp"
#include "nhbraid/model.hpp"
#include "nhbraid/spectral.hpp"
#include "nhbraid/braid.hpp"
#include "nhbraid/eps.hpp"
#include "nhbraid/linalg.hpp"
#include "nhbraid/dilation.hpp"
#include "nhbraid/evolution.hpp"
#include "nhbraid/reconstruct.hpp"
#include "nhbraid/report.hpp"
