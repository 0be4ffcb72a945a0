import os
import sys
import mod20

print(mod20)
