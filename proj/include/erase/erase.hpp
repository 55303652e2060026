#pragma once

// EMG Reduction by Adding Sources of EMG: ICA over EEG augmented with
// simulated-EMG reference channels, automated component rejection, and the
// evaluation stack (band power, SNR, fractal-dimension/force correlation).

#include "erase/config.hpp"
#include "erase/dsp.hpp"
#include "erase/emg.hpp"
#include "erase/fastica.hpp"
#include "erase/io.hpp"
#include "erase/metrics.hpp"
#include "erase/montage.hpp"
#include "erase/pipeline.hpp"
#include "erase/report.hpp"
#include "erase/rng.hpp"
#include "erase/stats.hpp"
#include "erase/synth.hpp"
#include "erase/trials.hpp"
#include "erase/types.hpp"
