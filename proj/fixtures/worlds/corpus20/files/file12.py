import os
import sys
import mod12

print(mod12)
