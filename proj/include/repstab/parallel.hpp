#pragma once

namespace repstab {

// Caps the number of OpenMP workers used by the kernels. 0 keeps the
// runtime default. All kernels produce identical bits for any setting.
void set_max_threads(int n);
int max_threads();

} // namespace repstab
