#pragma once

#include "tdc/codec.hpp"
#include "tdc/container.hpp"
#include "tdc/dictionary.hpp"
#include "tdc/entropy.hpp"
#include "tdc/metrics.hpp"
#include "tdc/partition.hpp"
#include "tdc/pursuit.hpp"
#include "tdc/quantize.hpp"
#include "tdc/signal.hpp"
#include "tdc/wav.hpp"
