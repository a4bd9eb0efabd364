#pragma once

#include "texelatt/color_naming.hpp"
#include "texelatt/image.hpp"

namespace texelatt {

/// Smooth multiplicative gain field of the image, estimated from the
/// background color: background pixels are read as scaled copies of the
/// background reference color. Values are relative to the darkest part of
/// the background, so the field is >= 1. A field whose range stays below
/// 5% is reported as all ones, as is a black or fully saturated background.
GrayImage estimate_gain(const Image& image, const ColorNamer& namer = default_color_namer());

/// Divides the estimated gain out of every pixel. Channels clipped at 255
/// are restored from the prototype color that best explains the pixel under
/// the local gain. Images with a flat gain field are returned unchanged.
Image flatten_illumination(const Image& image, const ColorNamer& namer = default_color_namer());

}  // namespace texelatt
